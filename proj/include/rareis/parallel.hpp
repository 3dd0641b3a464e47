#pragma once

#include <cstddef>
#include <functional>

namespace rareis::par {

// Worker-count resolution: an explicit request wins, then the
// RARE_IS_THREADS environment variable, then hardware concurrency.
int resolve_threads(int requested);

// Static contiguous partition of [begin, end) over `threads` workers.
// The first exception thrown by any worker is rethrown after all join;
// callers must make bodies independent per index.
void parallel_for(std::size_t begin, std::size_t end, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace rareis::par
