// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace sonotex::detail {
namespace {

enum class Kind { kForward1d, kForward2d, kInverse2d };

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(Kind kind, std::size_t rows, std::size_t cols) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(kind, rows, cols);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    // Planning needs scratch arrays; FFTW_ESTIMATE never touches their
    // contents and FFTW_UNALIGNED lets us execute on arbitrary vectors.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int r = static_cast<int>(rows);
    const int c = static_cast<int>(cols);
    double* real = fftw_alloc_real(rows * cols);
    fftw_complex* cplx = fftw_alloc_complex(rows * (cols / 2 + 1));
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::kForward1d:
        plan = fftw_plan_dft_r2c_1d(c, real, cplx, flags);
        break;
      case Kind::kForward2d:
        plan = fftw_plan_dft_r2c_2d(r, c, real, cplx, flags);
        break;
      case Kind::kInverse2d:
        plan = fftw_plan_dft_c2r_2d(r, c, cplx, real, flags);
        break;
    }
    fftw_free(real);
    fftw_free(cplx);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<Kind, std::size_t, std::size_t>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void rfft(std::span<const double> in, std::span<std::complex<double>> out) {
  fftw_plan plan = cache().get(Kind::kForward1d, 1, in.size());
  fftw_execute_dft_r2c(plan, const_cast<double*>(in.data()), as_fftw(out.data()));
}

void rfft2(const Grid<double>& in, Grid<std::complex<double>>& out) {
  out = Grid<std::complex<double>>(in.rows(), in.cols() / 2 + 1);
  fftw_plan plan = cache().get(Kind::kForward2d, in.rows(), in.cols());
  fftw_execute_dft_r2c(plan, const_cast<double*>(in.flat().data()),
                       as_fftw(out.flat().data()));
}

void irfft2(const Grid<std::complex<double>>& in, std::size_t rows, std::size_t cols,
            Grid<double>& out) {
  // c2r destroys its input.
  Grid<std::complex<double>> scratch = in;
  out = Grid<double>(rows, cols);
  fftw_plan plan = cache().get(Kind::kInverse2d, rows, cols);
  fftw_execute_dft_c2r(plan, as_fftw(scratch.flat().data()), out.flat().data());
}

}  // namespace sonotex::detail
