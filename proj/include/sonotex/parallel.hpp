// Copyright 2026 The sonotex Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <functional>

namespace sonotex {

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Work is handed out by an atomic counter, so callers must
// write results into per-index slots. The first exception thrown by any
// invocation is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace sonotex
