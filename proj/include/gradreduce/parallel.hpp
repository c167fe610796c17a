#pragma once

#include <cstddef>
#include <functional>

namespace gradreduce {

/// Worker cap from GRAD_REDUCE_THREADS (default: hardware concurrency, at least 1).
int default_workers();

/// Runs fn(i) for i in [0, n) on up to `workers` threads with a static block
/// partition. Results must be written by index so the outcome does not
/// depend on the worker count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

} // namespace gradreduce
