// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Thin thread-safe wrappers over FFTW. Plans are created once per shape
// under a lock and executed with the new-array interface.

#pragma once

#include <complex>
#include <span>

#include "sonotex/grid.hpp"

namespace sonotex::detail {

// Real-to-complex DFT of in (length n) into out (length n/2 + 1). Unnormalized.
void rfft(std::span<const double> in, std::span<std::complex<double>> out);

// 2-D real-to-complex DFT; out is resized to rows x (cols/2 + 1).
void rfft2(const Grid<double>& in, Grid<std::complex<double>>& out);

// Inverse of rfft2 for a real output of shape rows x cols. Unnormalized
// (result is scaled by rows * cols).
void irfft2(const Grid<std::complex<double>>& in, std::size_t rows, std::size_t cols,
            Grid<double>& out);

}  // namespace sonotex::detail
