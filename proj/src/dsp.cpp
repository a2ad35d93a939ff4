// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fft.hpp"
#include "sonotex/error.hpp"

namespace sonotex {
namespace {

constexpr int kTapsPerPhase = 32;
constexpr double kKaiserBeta = 8.0;

double kaiser(double x, double beta) {
  if (std::abs(x) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) /
         std::cyl_bessel_i(0.0, beta);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Taps for an output sample sitting `frac` input samples after input index
// `base`; tap t multiplies x[base - (half - 1) + t] and taps.size() == 2 half.
// The kernel spans kTapsPerPhase zero crossings of the cutoff sinc.
// Normalized to unit DC gain.
void design_phase(double frac, double cutoff, double half_width, std::span<double> taps) {
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  double sum = 0.0;
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(taps.size()); ++t) {
    const double d = frac + static_cast<double>(half - 1 - t);
    taps[t] = 2.0 * cutoff * sinc(2.0 * cutoff * d) * kaiser(d / half_width, kKaiserBeta);
    sum += taps[t];
  }
  for (double& v : taps) v /= sum;
}

std::uint64_t whole_hz(double rate, const char* what) {
  if (!(rate > 0.0) || std::round(rate) != rate)
    throw ValidationError(std::string("resample: ") + what +
                          " rate must be a positive whole number of Hz");
  return static_cast<std::uint64_t>(rate);
}

}  // namespace

void StftConfig::validate() const {
  if (!(window_ms > 0.0) || !std::isfinite(window_ms))
    throw ValidationError("stft: window_ms must be positive");
  if (hop_divisor < 1) throw ValidationError("stft: hop_divisor must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ValidationError("stft: epsilon must be positive");
}

std::size_t StftConfig::window_length(double sample_rate) const {
  validate();
  const double samples = window_ms * sample_rate / 1000.0;
  const auto k = static_cast<std::size_t>(std::llround(samples / hop_divisor)) * hop_divisor;
  if (k < 2)
    throw ValidationError("stft: window of " + std::to_string(window_ms) + " ms at " +
                          std::to_string(sample_rate) + " Hz is shorter than 2 samples");
  return k;
}

std::size_t StftConfig::hop(double sample_rate) const {
  return window_length(sample_rate) / hop_divisor;
}

std::size_t frame_count(std::size_t n, std::size_t window, std::size_t hop) {
  if (n < window || hop == 0) return 0;
  return (n - window) / hop + 1;
}

std::vector<double> hanning_window(std::size_t length) {
  if (length < 2) throw ValidationError("hanning_window: length must be >= 2");
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                 static_cast<double>(length)));
  return w;
}

AudioClip resample(const AudioClip& clip, double target_rate) {
  validate(clip);
  if (clip.sample_rate == target_rate) return clip;
  const std::uint64_t src = whole_hz(clip.sample_rate, "source");
  const std::uint64_t dst = whole_hz(target_rate, "target");
  const std::uint64_t g = std::gcd(src, dst);
  const std::uint64_t up = dst / g;
  const std::uint64_t down = src / g;

  const std::size_t n_in = clip.samples.size();
  const std::size_t n_out = (n_in * up + down / 2) / down;
  const double scale = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  const double cutoff = 0.5 * scale;
  const double half_width = 0.5 * kTapsPerPhase / scale;  // input samples
  const auto half = static_cast<std::size_t>(std::ceil(half_width));
  const std::size_t n_taps = 2 * half;

  // One set of taps per distinct fractional offset; build lazily when the
  // phase count is small, otherwise design per output sample.
  constexpr std::uint64_t kMaxCachedPhases = 4096;
  const bool cached = up <= kMaxCachedPhases;
  std::vector<double> table;
  std::vector<char> built;
  if (cached) {
    table.resize(up * n_taps);
    built.assign(up, 0);
  }
  std::vector<double> scratch(n_taps);

  AudioClip out;
  out.sample_rate = target_rate;
  out.source_id = clip.source_id;
  out.label = clip.label;
  out.samples.resize(n_out);
  const auto& x = clip.samples;
  for (std::size_t j = 0; j < n_out; ++j) {
    const std::uint64_t pos = j * down;
    const std::uint64_t base = pos / up;
    const std::uint64_t phase = pos % up;
    std::span<double> taps;
    if (cached) {
      taps = std::span<double>(table).subspan(phase * n_taps, n_taps);
      if (!built[phase]) {
        design_phase(static_cast<double>(phase) / static_cast<double>(up), cutoff, half_width,
                     taps);
        built[phase] = 1;
      }
    } else {
      taps = scratch;
      design_phase(static_cast<double>(phase) / static_cast<double>(up), cutoff, half_width,
                   taps);
    }
    double acc = 0.0;
    const auto first = static_cast<std::int64_t>(base) - static_cast<std::int64_t>(half - 1);
    for (std::size_t t = 0; t < n_taps; ++t) {
      const std::int64_t n = first + static_cast<std::int64_t>(t);
      if (n >= 0 && n < static_cast<std::int64_t>(n_in)) acc += taps[t] * x[n];
    }
    out.samples[j] = acc;
  }
  return out;
}

ComplexSpectrogram stft(const AudioClip& clip, std::size_t window_length, std::size_t hop) {
  validate(clip);
  if (hop < 1) throw ValidationError("stft: hop must be >= 1");
  const auto window = hanning_window(window_length);
  const std::size_t n = clip.samples.size();
  if (n < window_length)
    throw ValidationError("stft: clip '" + clip.source_id + "' has " + std::to_string(n) +
                          " samples, shorter than one window (" +
                          std::to_string(window_length) + ")");

  const std::size_t frames = frame_count(n, window_length, hop);
  const std::size_t bins = window_length / 2 + 1;
  ComplexSpectrogram out;
  out.values = Grid<std::complex<double>>(frames, bins);
  out.frame_hop_s = static_cast<double>(hop) / clip.sample_rate;
  out.bin_hz = clip.sample_rate / static_cast<double>(window_length);
  out.window_length = window_length;
  out.hop = hop;
  out.source_id = clip.source_id;
  out.label = clip.label;

  std::vector<double> frame(window_length);
  std::vector<std::complex<double>> spectrum(bins);
  const double two_pi_over_k = 2.0 * std::numbers::pi / static_cast<double>(window_length);
  for (std::size_t l = 0; l < frames; ++l) {
    const std::size_t start = l * hop;
    for (std::size_t i = 0; i < window_length; ++i)
      frame[i] = clip.samples[start + i] * window[i];
    detail::rfft(frame, spectrum);
    // The FFT is referenced to the frame start; shift to absolute time.
    const std::size_t shift = start % window_length;
    auto dst = out.values.row(l);
    for (std::size_t k = 0; k < bins; ++k) {
      const std::size_t turns = (k * shift) % window_length;
      dst[k] = spectrum[k] * std::polar(1.0, -two_pi_over_k * static_cast<double>(turns));
    }
  }
  return out;
}

ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  return stft(clip, cfg.window_length(clip.sample_rate), cfg.hop(clip.sample_rate));
}

LogSpectrogram log_spectrogram(const ComplexSpectrogram& spectrum, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ValidationError("log_spectrogram: epsilon must be positive");
  LogSpectrogram out;
  out.values = Grid<double>(spectrum.frames(), spectrum.bins());
  out.frame_hop_s = spectrum.frame_hop_s;
  out.bin_hz = spectrum.bin_hz;
  out.source_id = spectrum.source_id;
  out.label = spectrum.label;
  const auto src = spectrum.values.flat();
  auto dst = out.values.flat();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double mag = std::abs(src[i]);
    if (!std::isfinite(mag))
      throw ValidationError("log_spectrogram: non-finite coefficient in '" +
                            spectrum.source_id + "'");
    dst[i] = std::log(std::max(mag, epsilon));
  }
  return out;
}

}  // namespace sonotex
