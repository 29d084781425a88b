#pragma once

#include <cstddef>
#include <functional>

namespace fpl {

/// Worker count for jobs <= 0: hardware concurrency (at least 1).
int resolve_jobs(int jobs);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Items are claimed
/// dynamically; callers write results by index so the output does not
/// depend on scheduling. The first exception thrown by a body is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace fpl
