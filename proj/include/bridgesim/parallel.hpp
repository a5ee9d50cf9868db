#pragma once

#include <cstddef>
#include <functional>

namespace bridgesim {

/// Worker count resolution: BRIDGESIM_THREADS wins if set, then
/// `requested` (0 means hardware concurrency).
int resolve_threads(int requested);

/// Runs body(i) for i in [0, n) across up to `threads` workers. Work is
/// assigned by index block, so anything written to slot i is identical
/// whatever the thread count. Exceptions are collected and rethrown.
void parallel_for_index(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace bridgesim
