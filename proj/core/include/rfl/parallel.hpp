#pragma once

#include <cstddef>
#include <functional>

namespace rfl {

// Number of workers used when a caller passes threads = 0.
int default_thread_count();

// Runs fn(i) for i in [0, n) on up to `threads` workers, partitioned into
// contiguous chunks. Work items must be independent; output must go to
// per-index slots so the result does not depend on the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace rfl
