#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <span>

namespace fdemle {

int resolve_workers(int requested);

// Runs body(i) for i in [0, n). Work is split into contiguous blocks, so any
// per-index output is independent of the worker count. The exception from the
// lowest failing block is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

// Sum in a fixed pairwise order.
double pairwise_sum(std::span<const double> x);

}  // namespace fdemle
