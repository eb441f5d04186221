#pragma once

#include <cstddef>
#include <functional>

namespace pcw {

// Worker cap: min(hardware_concurrency, PCW_THREADS). At least 1.
std::size_t thread_count();

// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs; any
// reduction happens inside a single iteration in a fixed order, so results
// are bitwise identical for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pcw
