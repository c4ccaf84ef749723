#pragma once

#include <cstddef>
#include <functional>

namespace meritcurve {

/// Worker count: MERITCURVE_THREADS if set (>= 1), else hardware concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once; callers write results into per-index slots so the outcome
/// does not depend on the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace meritcurve
