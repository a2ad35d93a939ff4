// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "sonotex/dsp.hpp"
#include "sonotex/error.hpp"

using namespace sonotex;
using namespace sonotex::testing;

TEST_CASE("hanning window closed form") {
  const auto w4 = hanning_window(4);
  REQUIRE(w4.size() == 4);
  CHECK(w4[0] == 0.0);
  CHECK(w4[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w4[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w4[3] == doctest::Approx(0.5).epsilon(1e-15));

  const auto w2 = hanning_window(2);
  CHECK(w2[0] == 0.0);
  CHECK(w2[1] == doctest::Approx(1.0).epsilon(1e-15));

  for (std::size_t k : {4u, 8u, 552u}) {
    const auto w = hanning_window(k);
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(k / 2.0).epsilon(1e-12));
    CHECK(*std::max_element(w.begin(), w.end()) <= 1.0);
    CHECK(w[0] == 0.0);
  }
  CHECK_THROWS_AS(hanning_window(1), ValidationError);
  CHECK_THROWS_AS(hanning_window(0), ValidationError);
}

TEST_CASE("stft config derives an even window with integer hop") {
  StftConfig cfg;
  CHECK(cfg.window_length(11025.0) == 552);
  CHECK(cfg.hop(11025.0) == 276);
  cfg.hop_divisor = 1;
  CHECK(cfg.window_length(11025.0) == 551);
  cfg.hop_divisor = 4;
  CHECK(cfg.window_length(11025.0) % 4 == 0);

  CHECK_THROWS_AS((StftConfig{0.0, 2, 1e-10}.validate()), ValidationError);
  CHECK_THROWS_AS((StftConfig{50.0, 0, 1e-10}.validate()), ValidationError);
  CHECK_THROWS_AS((StftConfig{50.0, 2, 0.0}.validate()), ValidationError);
  CHECK_THROWS_AS((StftConfig{0.05, 2, 1e-10}.window_length(11025.0)), ValidationError);
}

TEST_CASE("frame count follows floor((N-K)/u)+1") {
  CHECK(frame_count(55125, 552, 276) == (55125 - 552) / 276 + 1);
  CHECK(frame_count(552, 552, 276) == 1);
  CHECK(frame_count(551, 552, 276) == 0);

  const auto clip = noise_clip(3, 11025.0, 55125);
  const auto spec = stft(clip, StftConfig{});
  CHECK(spec.frames() == (55125 - 552) / 276 + 1);
  CHECK(spec.bins() == 552 / 2 + 1);
  CHECK(spec.frame_hop_s == doctest::Approx(276.0 / 11025.0));
  CHECK(spec.bin_hz == doctest::Approx(11025.0 / 552.0));

  // Framing identity across a range of lengths, including trailing partial hops.
  for (std::size_t n = 64; n < 400; n += 37) {
    const auto s = stft(noise_clip(n, 8000.0, n), 64, 24);
    CHECK(s.frames() == (n - 64) / 24 + 1);
  }
}

TEST_CASE("stft matches the direct atom inner product") {
  const auto clip = noise_clip(11, 8000.0, 300);
  const std::size_t k_len = 64, hop = 20;
  const auto spec = stft(clip, k_len, hop);
  double max_ref = 0.0, max_err = 0.0;
  for (std::size_t l = 0; l < spec.frames(); ++l) {
    const auto ref = dft_frame(clip.samples, k_len, l * hop);
    for (std::size_t k = 0; k < spec.bins(); ++k) {
      max_ref = std::max(max_ref, std::abs(ref[k]));
      max_err = std::max(max_err, std::abs(ref[k] - spec.values(l, k)));
    }
  }
  CHECK(max_err <= 1e-9 * max_ref);
}

TEST_CASE("full-band magnitudes are mirror symmetric for real input") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto clip = noise_clip(seed, 8000.0, 200);
    for (std::size_t k_len : {48u, 51u}) {
      const auto full = dft_frame(clip.samples, k_len, 17);
      for (std::size_t k = 1; k < k_len; ++k) {
        const double a = std::abs(full[k]), b = std::abs(full[k_len - k]);
        CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, a));
      }
      // The retained half equals the first floor(K/2)+1 full bins.
      const auto spec = stft(clip, k_len, k_len);
      REQUIRE(spec.bins() == k_len / 2 + 1);
    }
  }
}

TEST_CASE("pure tone peaks at round(f0 K / fs)") {
  // Single-frame oracle for the 1 kHz example: K = 551 at 11025 Hz -> bin 50.
  const auto tone = sine_clip(1000.0, 11025.0, 11025);
  const auto frame = dft_frame(tone.samples, 551, 551);
  std::size_t best = 0;
  for (std::size_t k = 0; k <= 551 / 2; ++k)
    if (std::abs(frame[k]) > std::abs(frame[best])) best = k;
  CHECK(best == 50);

  const auto spec = stft(tone, 551, 551 / 2);
  for (std::size_t l = 1; l + 1 < spec.frames(); ++l) {
    const auto row = spec.values.row(l);
    const auto it = std::max_element(row.begin(), row.end(),
                                     [](auto a, auto b) { return std::abs(a) < std::abs(b); });
    CHECK(static_cast<std::size_t>(it - row.begin()) == 50);
  }
}

TEST_CASE("zero signal gives zero coefficients and the floored log") {
  AudioClip zero{std::vector<double>(5000, 0.0), 11025.0, "zero", {}};
  const auto spec = stft(zero, StftConfig{});
  for (auto v : spec.values.flat()) CHECK(v == std::complex<double>(0.0, 0.0));
  const auto s = log_spectrogram(spec, 1e-10);
  for (double v : s.values.flat()) CHECK(v == std::log(1e-10));
  CHECK(std::log(1e-10) == doctest::Approx(-23.025850929940457).epsilon(1e-12));
}

TEST_CASE("stft is linear in the signal") {
  const auto clip = noise_clip(5, 11025.0, 4000);
  const auto base = stft(clip, StftConfig{});
  for (double a : {0.0, 1.0, 2.0}) {
    AudioClip scaled = clip;
    for (double& v : scaled.samples) v *= a;
    const auto spec = stft(scaled, StftConfig{});
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      const auto expect = a * base.values.flat()[i];
      CHECK(std::abs(spec.values.flat()[i] - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("log spectrogram floor and gain covariance") {
  ComplexSpectrogram f;
  f.values = Grid<std::complex<double>>(1, 3);
  f.values(0, 0) = {1.0, 0.0};
  f.values(0, 1) = {0.0, 0.0};
  f.values(0, 2) = {0.6, 0.8};
  const auto s = log_spectrogram(f, 1e-10);
  CHECK(s.values(0, 0) == 0.0);
  CHECK(s.values(0, 1) == doctest::Approx(-23.025850929940457).epsilon(1e-12));
  CHECK(std::abs(s.values(0, 2)) < 1e-15);
  CHECK_THROWS_AS(log_spectrogram(f, 0.0), ValidationError);

  const auto clip = noise_clip(9, 11025.0, 6000);
  AudioClip louder = clip;
  for (double& v : louder.samples) v *= 2.0;
  const StftConfig cfg;
  const auto a = compute_log_spectrogram(clip, cfg);
  const auto b = compute_log_spectrogram(louder, cfg);
  const double floor = std::log(cfg.epsilon);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values.flat()[i] == floor) continue;
    CHECK(b.values.flat()[i] - a.values.flat()[i] == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
  for (double v : a.values.flat()) CHECK(v >= floor);
}

TEST_CASE("stft input validation") {
  AudioClip short_clip{std::vector<double>(100, 0.1), 11025.0, "short", {}};
  CHECK_THROWS_AS(stft(short_clip, StftConfig{}), ValidationError);
  AudioClip bad{{0.0, std::nan("")}, 11025.0, "nan", {}};
  CHECK_THROWS_AS(stft(bad, 2, 1), ValidationError);
}

TEST_CASE("resample identity, zero and validation") {
  const auto clip = noise_clip(4, 11025.0, 1000);
  const auto same = resample(clip, 11025.0);
  CHECK(same.samples == clip.samples);

  AudioClip zero{std::vector<double>(4410, 0.0), 44100.0, "z", {}};
  for (double rate : {11025.0, 8000.0, 96000.0}) {
    const auto r = resample(zero, rate);
    CHECK(r.sample_rate == rate);
    for (double v : r.samples) CHECK(v == 0.0);
  }

  CHECK_THROWS_AS(resample(AudioClip{{}, 44100.0, "empty", {}}, 11025.0), ValidationError);
  CHECK_THROWS_AS(resample(AudioClip{{0.0, INFINITY}, 44100.0, "inf", {}}, 11025.0),
                  ValidationError);
  CHECK_THROWS_AS(resample(clip, 0.0), ValidationError);
}

TEST_CASE("resampled sine keeps duration and frequency") {
  const auto tone = sine_clip(1000.0, 44100.0, 88200);
  const auto out = resample(tone, 11025.0);
  CHECK(out.samples.size() >= 22049);
  CHECK(out.samples.size() <= 22051);
  const double peak_hz = static_cast<double>(peak_dft_bin(out.samples)) * 11025.0 /
                         static_cast<double>(out.samples.size());
  CHECK(std::abs(peak_hz - 1000.0) <= 2.0);

  // Non-integer ratio and upsampling also preserve duration within a sample.
  const auto a = resample(sine_clip(440.0, 48000.0, 48000), 11025.0);
  CHECK(std::abs(static_cast<double>(a.samples.size()) - 11025.0) <= 1.0);
  const auto b = resample(sine_clip(440.0, 8000.0, 8000), 11025.0);
  CHECK(std::abs(static_cast<double>(b.samples.size()) - 11025.0) <= 1.0);
}

TEST_CASE("resampling removes content above the target Nyquist") {
  // 7 kHz aliases into the 11025 Hz band unless filtered.
  const auto tone = sine_clip(7000.0, 44100.0, 44100);
  const auto out = resample(tone, 11025.0);
  double energy = 0.0;
  for (std::size_t i = 100; i + 100 < out.samples.size(); ++i) energy += out.samples[i] * out.samples[i];
  const double rms = std::sqrt(energy / static_cast<double>(out.samples.size() - 200));
  CHECK(rms < 0.01 * 0.5 / std::sqrt(2.0));
}
