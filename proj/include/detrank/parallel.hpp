#pragma once

#include <cstddef>
#include <functional>

namespace detrank {

/// Worker count: TRANSFER_RANK_THREADS when set to a positive integer,
/// otherwise the number of logical cores.
[[nodiscard]] std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
/// visited exactly once; the first exception thrown by any body is rethrown
/// after all workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace detrank
