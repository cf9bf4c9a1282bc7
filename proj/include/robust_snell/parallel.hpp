#pragma once

#include <cstddef>
#include <functional>

namespace robust_snell {

/// Worker threads available to per-level loops: hardware concurrency, capped
/// by the ROBUST_SNELL_THREADS environment variable when it is set.
std::size_t worker_count();

/// Calls body(i) for i in [0, count). Iterations must be independent.
/// Small ranges run inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t min_chunk = 2048);

} // namespace robust_snell
