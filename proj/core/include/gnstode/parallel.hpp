#pragma once

#include <cstddef>
#include <functional>

namespace gnstode {

/// Worker cap: GNSTODE_THREADS if set (minimum 1), else hardware concurrency.
int worker_count();

/// Runs fn(0..count-1) across worker threads with a static block partition.
/// Callers must only write to per-index slots, so results are identical to a
/// sequential run. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace gnstode
