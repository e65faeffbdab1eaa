#pragma once

#include <cstddef>
#include <functional>

namespace maxfun {

/// Worker count: MAXFUN_THREADS when set and positive, otherwise the
/// hardware concurrency (0 or unset means auto).
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; results are
/// expected to be written to per-index slots so output does not depend on
/// scheduling. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace maxfun
