#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "cfr/rng.hpp"

namespace cfr {

// How gradients of a per-sample loss are accumulated over a batch.
// kSum matches objectives written as plain sums over samples; kMean divides
// by the batch size so the step size is independent of batch/dataset size.
enum class GradForm { kSum, kMean };

// Partition [0, n) into shuffled batches of size batch_size (0 => one full
// batch, in natural order, no shuffling).
inline std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng& rng) {
  if (batch_size <= 0 || batch_size >= n) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    return {std::move(all)};
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    int end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace cfr
