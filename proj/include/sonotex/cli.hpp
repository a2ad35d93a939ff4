// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sonotex/evaluation.hpp"

namespace sonotex {

// Effective settings of one CLI invocation. Sources in increasing priority:
// built-in defaults, the --config JSON document, command-line flags.
struct RunConfig {
  std::string data;   // dataset root
  std::string out;    // output directory
  std::string model;  // trained artifact directory (classify)

  double window_ms = 50.0;
  unsigned hop_divisor = 2;
  double epsilon = 1e-10;
  double sample_rate = kDefaultSampleRate;
  std::string sizes = "16x16,16x8,8x16,8x8,8x4,4x8,4x4";
  std::uint32_t per_size = 60;
  std::size_t per_class = 50;
  double excerpt_s = 5.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = all hardware threads
  bool standardize = false;
  std::vector<std::string> classes;  // required class directories, optional

  std::string schedule = "5,10,20,30,40,50,60";  // sweep: per_size steps
  std::string seeds;                             // sweep: defaults to {seed}

  // synth
  std::size_t synth_classes = 4;
  std::size_t recordings = 4;
  double seconds = 30.0;
  bool force = false;

  ExperimentConfig experiment() const;
};

std::vector<std::uint32_t> parse_schedule(const std::string& text);
std::vector<std::uint64_t> parse_seeds(const std::string& text);

// Entry point for the `sonotex` tool. Returns the process exit code:
// 0 success, 1 I/O or system failure, 2 validation error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sonotex
