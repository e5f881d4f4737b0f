#pragma once

#include <algorithm>
#include <numeric>

namespace deepglo {

template <typename Rng>
std::vector<WindowBatch> plan_batches(Index n_rows, Index first, Index last, Index batch_rows,
                                      Index batch_cols, Rng& rng) {
  std::vector<Index> order(static_cast<std::size_t>(n_rows));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<WindowBatch> batches;
  for (Index c = first; c < last; c += batch_cols) {
    const Index count = std::min(batch_cols, last - c);
    for (Index r = 0; r < n_rows; r += batch_rows) {
      WindowBatch b;
      const Index rows = std::min(batch_rows, n_rows - r);
      b.rows.assign(order.begin() + r, order.begin() + r + rows);
      b.first_target = c;
      b.target_count = count;
      batches.push_back(std::move(b));
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace deepglo
