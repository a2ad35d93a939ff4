// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sonotex/audio.hpp"

#include <cmath>

#include "sonotex/error.hpp"

namespace sonotex {

void validate(const AudioClip& clip) {
  if (!(clip.sample_rate > 0.0) || !std::isfinite(clip.sample_rate))
    throw ValidationError("clip '" + clip.source_id + "': sample rate must be positive");
  if (clip.samples.empty())
    throw ValidationError("clip '" + clip.source_id + "': no samples");
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    if (!std::isfinite(clip.samples[i]))
      throw ValidationError("clip '" + clip.source_id + "': non-finite sample at index " +
                            std::to_string(i));
  }
}

}  // namespace sonotex
