#pragma once

#include <cstddef>
#include <functional>

namespace gffhom {

/// Worker count from GFFHOM_WORKERS, else the hardware concurrency (>= 1).
int worker_count_from_env();

/// Calls task(i) for i in [0, n) on `workers` threads (0: from the
/// environment).  Indices are claimed dynamically; callers must write
/// results by index so the outcome does not depend on the schedule.  The
/// first exception thrown by a task is rethrown after all workers join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

}  // namespace gffhom
