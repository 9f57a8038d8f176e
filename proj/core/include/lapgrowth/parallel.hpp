#pragma once

#include <cstddef>
#include <functional>

namespace lapgrowth {

/// 0 means one thread per hardware core.
unsigned resolve_threads(unsigned requested) noexcept;

/// Runs body(i) for i in [0, n) on up to `threads` workers. Indices are handed
/// out dynamically, so body must write results by index. The first exception
/// thrown by any worker is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace lapgrowth
