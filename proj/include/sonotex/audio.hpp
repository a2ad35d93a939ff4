// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sonotex {

// Mono sample buffer. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 0.0;  // Hz
  std::string source_id;
  std::optional<std::string> label;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws ValidationError unless sample_rate > 0, the buffer is non-empty and
// every sample is finite.
void validate(const AudioClip& clip);

}  // namespace sonotex
