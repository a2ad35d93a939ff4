// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sonotex/audio.hpp"
#include "sonotex/grid.hpp"

namespace sonotex {

inline constexpr double kDefaultSampleRate = 11025.0;

struct StftConfig {
  double window_ms = 50.0;
  unsigned hop_divisor = 2;  // hop = window_length / hop_divisor
  double epsilon = 1e-10;    // floor applied to |F| before the log

  void validate() const;

  // Window length K in samples at `sample_rate`: window_ms converted to
  // samples and rounded to the nearest multiple of hop_divisor, so that the
  // hop is an exact integer. 50 ms at 11025 Hz with hop_divisor 2 gives 552.
  std::size_t window_length(double sample_rate) const;
  std::size_t hop(double sample_rate) const;

  bool operator==(const StftConfig&) const = default;
};

// F[l][k] for frames l and bins k = 0..K/2.
struct ComplexSpectrogram {
  Grid<std::complex<double>> values;
  double frame_hop_s = 0.0;
  double bin_hz = 0.0;
  std::size_t window_length = 0;
  std::size_t hop = 0;
  std::string source_id;
  std::optional<std::string> label;

  std::size_t frames() const { return values.rows(); }
  std::size_t bins() const { return values.cols(); }
};

// S[l][k] = ln(max(|F[l][k]|, epsilon)).
struct LogSpectrogram {
  Grid<double> values;
  double frame_hop_s = 0.0;
  double bin_hz = 0.0;
  std::string source_id;
  std::optional<std::string> label;

  std::size_t frames() const { return values.rows(); }
  std::size_t bins() const { return values.cols(); }
};

// Number of full frames of length `window` with step `hop` in n samples;
// 0 when n < window.
std::size_t frame_count(std::size_t n, std::size_t window, std::size_t hop);

// Periodic Hann window: w[n] = 0.5 (1 - cos(2 pi n / K)).
std::vector<double> hanning_window(std::size_t length);

// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel
// (beta 8) spanning 32 zero crossings of the cutoff sinc, i.e. 32 taps per
// phase at the lower of the two rates. Cutoff sits at the lower Nyquist
// frequency. Returns the clip unchanged when the rates already agree.
// Both rates must be whole numbers of Hz.
AudioClip resample(const AudioClip& clip, double target_rate);

// F[l,k] = sum_n f[n] w[n - l u] exp(-i 2 pi k n / K) with frames starting at
// l u, l = 0..floor((N-K)/u). The phase reference is absolute sample time.
ComplexSpectrogram stft(const AudioClip& clip, std::size_t window_length,
                        std::size_t hop);
ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg);

LogSpectrogram log_spectrogram(const ComplexSpectrogram& spectrum, double epsilon);

inline LogSpectrogram compute_log_spectrogram(const AudioClip& clip,
                                              const StftConfig& cfg) {
  return log_spectrogram(stft(clip, cfg), cfg.epsilon);
}

}  // namespace sonotex
