// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Synthetic stand-in corpus. Each class is a distinct time-frequency
// texture; recordings within a class differ in pitch, tempo and timbre.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "sonotex/error.hpp"
#include "sonotex/evaluation.hpp"
#include "sonotex/rng.hpp"
#include "sonotex/wav.hpp"

namespace sonotex {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::array<const char*, 8> kClassNames = {
    "tonal", "vibrato", "percussive", "broadband", "chordal", "tremolo", "glissando", "bass"};
constexpr std::array<int, 8> kScale = {0, 2, 4, 5, 7, 9, 11, 12};

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

// Sum of harmonics h = 1.. below 0.45 fs with amplitude h^-rolloff, written
// into out[start, start + n) under envelope env(t).
template <typename Env>
void add_note(std::vector<double>& out, double fs, std::size_t start, std::size_t n, double f0,
              double rolloff, double gain, Env env) {
  const std::size_t end = std::min(out.size(), start + n);
  for (int h = 1; h * f0 < 0.45 * fs && h <= 40; ++h) {
    const double amp = gain * std::pow(static_cast<double>(h), -rolloff);
    const double step = kTwoPi * h * f0 / fs;
    for (std::size_t i = start; i < end; ++i)
      out[i] += amp * env(static_cast<double>(i - start) / fs) *
                std::sin(step * static_cast<double>(i - start));
  }
}

// Plucked/struck envelope: linear attack, decay to sustain, release at the end.
auto struck_envelope(double attack, double decay, double sustain, double length) {
  return [=](double t) {
    constexpr double release = 0.02;
    double a;
    if (t < attack) {
      a = t / attack;
    } else {
      a = sustain + (1.0 - sustain) * std::exp(-(t - attack) / decay);
    }
    if (t > length - release) a *= std::max(0.0, (length - t) / release);
    return a;
  };
}

std::vector<double> tonal(Rng& rng, double fs, std::size_t n, bool chords) {
  std::vector<double> out(n, 0.0);
  const double f0 = log_uniform(rng, 110.0, 440.0);
  const double beat = rng.uniform(0.25, 0.5);
  const double rolloff = rng.uniform(0.8, 1.4);
  double t = 0.0;
  const double total = static_cast<double>(n) / fs;
  while (t < total) {
    const double dur = beat * static_cast<double>(1 + rng.uniform_index(2));
    const double sounding = 0.85 * dur;
    const int step = kScale[rng.uniform_index(kScale.size())];
    const auto start = static_cast<std::size_t>(t * fs);
    const auto len = static_cast<std::size_t>(sounding * fs);
    const auto env = struck_envelope(0.004, 0.12, 0.3, sounding);
    if (chords) {
      const int third = rng.uniform_index(2) ? 4 : 3;
      for (int interval : {0, third, 7})
        add_note(out, fs, start, len, f0 * std::exp2((step + interval) / 12.0), rolloff, 1.0 / 3.0,
                 env);
    } else {
      add_note(out, fs, start, len, f0 * std::exp2(step / 12.0), rolloff, 1.0, env);
    }
    t += dur;
  }
  return out;
}

std::vector<double> vibrato(Rng& rng, double fs, std::size_t n) {
  std::vector<double> out(n, 0.0);
  const double f0 = log_uniform(rng, 250.0, 800.0);
  const double rate = rng.uniform(4.5, 7.0);
  const double depth = rng.uniform(0.015, 0.03);
  const double rolloff = rng.uniform(2.0, 2.6);
  const double beat = rng.uniform(0.4, 0.9);
  const double swell = rng.uniform(0.0, kTwoPi);
  const double glide = 1.0 - std::exp(-1.0 / (0.06 * fs));
  double target = f0, freq = f0, next_change = 0.0;
  std::array<double, 6> phase{};
  double breath = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    if (t >= next_change) {
      target = f0 * std::exp2(kScale[rng.uniform_index(kScale.size())] / 12.0);
      next_change += beat * static_cast<double>(1 + rng.uniform_index(2));
    }
    freq += (target - freq) * glide;
    const double inst = freq * (1.0 + depth * std::sin(kTwoPi * rate * t));
    const double amp = 0.8 + 0.2 * std::sin(kTwoPi * 0.25 * t + swell);
    double v = 0.0;
    for (std::size_t h = 0; h < phase.size(); ++h) {
      const double fh = inst * static_cast<double>(h + 1);
      if (fh >= 0.45 * fs) break;
      phase[h] = std::fmod(phase[h] + kTwoPi * fh / fs, kTwoPi);
      v += std::pow(static_cast<double>(h + 1), -rolloff) * std::sin(phase[h]);
    }
    breath = 0.9 * breath + 0.1 * rng.normal();
    out[i] = amp * v + 0.02 * breath;
  }
  return out;
}

std::vector<double> percussive(Rng& rng, double fs, std::size_t n) {
  std::vector<double> out(n, 0.0);
  const double beat = rng.uniform(0.15, 0.35);
  const double tau = rng.uniform(0.02, 0.06);
  const double smoothing = rng.uniform(0.2, 0.7);
  const double membrane = rng.uniform(60.0, 160.0);
  double t = 0.0;
  const double total = static_cast<double>(n) / fs;
  while (t < total) {
    if (rng.uniform() < 0.85) {
      const double gain = rng.uniform(0.6, 1.0);
      const auto start = static_cast<std::size_t>(t * fs);
      const auto len = static_cast<std::size_t>(8.0 * tau * fs);
      double lp = 0.0;
      for (std::size_t i = start; i < std::min(n, start + len); ++i) {
        const double dt = static_cast<double>(i - start) / fs;
        lp = (1.0 - smoothing) * rng.normal() + smoothing * lp;
        out[i] += gain * (lp * std::exp(-dt / tau) +
                          0.5 * std::sin(kTwoPi * membrane * dt) * std::exp(-dt / 0.1));
      }
    }
    t += beat;
  }
  return out;
}

std::vector<double> broadband(Rng& rng, double fs, std::size_t n) {
  std::vector<double> out(n, 0.0);
  const double a1 = rng.uniform(0.3, 0.8);
  const double a2 = rng.uniform(0.85, 0.97);
  const double mix = rng.uniform(0.2, 0.6);
  const double mod = rng.uniform(0.05, 0.3);
  const double phi = rng.uniform(0.0, kTwoPi);
  double y1 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    y1 = (1.0 - a1) * x + a1 * y1;
    y2 = (1.0 - a2) * x + a2 * y2;
    const double t = static_cast<double>(i) / fs;
    out[i] = (0.6 + 0.4 * std::sin(kTwoPi * mod * t + phi)) * (y1 + mix * 4.0 * y2);
  }
  return out;
}

std::vector<double> tremolo(Rng& rng, double fs, std::size_t n) {
  std::vector<double> out(n, 0.0);
  const double f0 = log_uniform(rng, 150.0, 500.0);
  const double rate = rng.uniform(6.0, 12.0);
  const double rolloff = rng.uniform(1.0, 1.6);
  const double glide = 1.0 - std::exp(-1.0 / (0.05 * fs));
  double target = f0, freq = f0, next_change = 0.0;
  std::array<double, 12> phase{};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    if (t >= next_change) {
      target = f0 * std::exp2(kScale[rng.uniform_index(kScale.size())] / 12.0);
      next_change += rng.uniform(1.0, 2.0);
    }
    freq += (target - freq) * glide;
    double v = 0.0;
    for (std::size_t h = 0; h < phase.size(); ++h) {
      const double fh = freq * static_cast<double>(h + 1);
      if (fh >= 0.45 * fs) break;
      phase[h] = std::fmod(phase[h] + kTwoPi * fh / fs, kTwoPi);
      v += std::pow(static_cast<double>(h + 1), -rolloff) * std::sin(phase[h]);
    }
    out[i] = (0.6 + 0.4 * std::sin(kTwoPi * rate * t)) * v;
  }
  return out;
}

std::vector<double> glissando(Rng& rng, double fs, std::size_t n) {
  std::vector<double> out(n, 0.0);
  const double f0 = log_uniform(rng, 150.0, 400.0);
  const double period = rng.uniform(1.0, 3.0);
  const double span = rng.uniform(0.8, 1.5);  // octaves
  std::array<double, 4> phase{};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double saw = std::fmod(t / period, 1.0);
    const double tri = saw < 0.5 ? 2.0 * saw : 2.0 - 2.0 * saw;
    const double f = f0 * std::exp2(span * tri);
    double v = 0.0;
    for (std::size_t h = 0; h < phase.size(); ++h) {
      const double fh = f * static_cast<double>(h + 1);
      if (fh >= 0.45 * fs) break;
      phase[h] = std::fmod(phase[h] + kTwoPi * fh / fs, kTwoPi);
      v += std::sin(phase[h]) / static_cast<double>(h + 1);
    }
    out[i] = v;
  }
  return out;
}

std::vector<double> bass(Rng& rng, double fs, std::size_t n) {
  std::vector<double> out(n, 0.0);
  const double f0 = log_uniform(rng, 40.0, 90.0);
  const double beat = rng.uniform(0.5, 1.0);
  const double rolloff = rng.uniform(0.6, 0.9);
  double t = 0.0;
  const double total = static_cast<double>(n) / fs;
  while (t < total) {
    const double dur = beat * static_cast<double>(1 + rng.uniform_index(2));
    const auto env = struck_envelope(0.06, 0.4, 0.7, 0.95 * dur);
    add_note(out, fs, static_cast<std::size_t>(t * fs), static_cast<std::size_t>(0.95 * dur * fs),
             f0 * std::exp2(kScale[rng.uniform_index(kScale.size())] / 12.0), rolloff, 1.0, env);
    t += dur;
  }
  return out;
}

std::vector<double> render(std::size_t cls, Rng& rng, double fs, std::size_t n) {
  switch (cls) {
    case 0: return tonal(rng, fs, n, false);
    case 1: return vibrato(rng, fs, n);
    case 2: return percussive(rng, fs, n);
    case 3: return broadband(rng, fs, n);
    case 4: return tonal(rng, fs, n, true);
    case 5: return tremolo(rng, fs, n);
    case 6: return glissando(rng, fs, n);
    default: return bass(rng, fs, n);
  }
}

}  // namespace

void SynthSpec::validate() const {
  if (classes < 1 || classes > kClassNames.size())
    throw ValidationError("synth: classes must be between 1 and 8");
  if (recordings_per_class < 1) throw ValidationError("synth: recordings_per_class must be >= 1");
  if (!(seconds_per_recording > 0.0)) throw ValidationError("synth: seconds must be positive");
  if (!(sample_rate > 0.0) || std::round(sample_rate) != sample_rate)
    throw ValidationError("synth: sample_rate must be a positive whole number of Hz");
}

std::string synth_class_name(std::size_t index) {
  if (index >= kClassNames.size()) throw ValidationError("synth: class index out of range");
  return kClassNames[index];
}

std::vector<Recording> synth_dataset(const SynthSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.seconds_per_recording * spec.sample_rate));
  std::vector<Recording> out;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t r = 0; r < spec.recordings_per_class; ++r) {
      Rng rng(spec.seed, c * 100003 + r);
      auto samples = render(c, rng, spec.sample_rate, n);
      double peak = 0.0;
      for (double v : samples) peak = std::max(peak, std::abs(v));
      const double scale = peak > 0.0 ? 0.5 / peak : 0.0;
      for (double& v : samples) v = quantize_pcm16(v * scale + 1e-4 * rng.normal());

      char name[32];
      std::snprintf(name, sizeof name, "rec%02zu.wav", r);
      Recording rec;
      rec.class_label = kClassNames[c];
      rec.recording_id = rec.class_label + "/" + name;
      rec.clip.samples = std::move(samples);
      rec.clip.sample_rate = spec.sample_rate;
      rec.clip.source_id = rec.recording_id;
      rec.clip.label = rec.class_label;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace sonotex
