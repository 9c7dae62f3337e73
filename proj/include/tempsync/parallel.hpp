#pragma once

#include <cstddef>
#include <functional>

namespace tsync {

/// Worker count: `requested` if nonzero, else SYNC_TOOLKIT_WORKERS, else the
/// hardware concurrency (at least 1).
std::size_t resolve_workers(std::size_t requested);

/// Runs body(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any job is rethrown after all threads have joined.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace tsync
