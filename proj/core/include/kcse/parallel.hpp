#pragma once

#include <cstddef>
#include <functional>

namespace kcse {

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Indices are split into contiguous blocks, so results
/// written per index do not depend on the worker count. The first
/// exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace kcse
