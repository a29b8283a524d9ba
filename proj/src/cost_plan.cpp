#include "tucker/cost_plan.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace tucker {

CostEstimate plan_sthosvd_cost(const Shape& dims, std::span<const std::int64_t> ranks,
                               const Shape& grid, std::span<const int> mode_order) {
  const int n = dims.order();
  if (static_cast<int>(ranks.size()) != n || grid.order() != n) {
    throw DimensionError("cost plan needs matching tensor, rank, and grid orders");
  }
  std::vector<int> order(mode_order.begin(), mode_order.end());
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
  }

  const double total_ranks = static_cast<double>(grid.product());

  // Current extent per mode: starts at I, drops to R once processed.
  std::vector<double> current(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) current[static_cast<std::size_t>(m)] = static_cast<double>(dims.extent(m));

  double flops = 0.0;
  double words = 0.0;
  double messages = 0.0;
  for (int m : order) {
    const double i_m = static_cast<double>(dims.extent(m));
    const double r_m = static_cast<double>(ranks[static_cast<std::size_t>(m)]);
    const double p_m = static_cast<double>(grid.extent(m));
    double others = 1.0;
    for (int q = 0; q < n; ++q) {
      if (q != m) others *= current[static_cast<std::size_t>(q)];
    }
    flops += (i_m * i_m + 2.0 * r_m * i_m) * others / total_ranks;
    words += (i_m * (p_m - 1.0) / p_m + 2.0 * r_m * (p_m - 1.0)) * others / total_ranks;
    words += i_m * i_m;  // Gram replication
    messages += p_m - 1.0 + 2.0 * std::log2(total_ranks);  // redistribution Gram
    messages += 2.0 * p_m * std::log2(p_m);                // reduction TTM
    current[static_cast<std::size_t>(m)] = r_m;
  }
  for (int m = 0; m < n; ++m) {
    const double i_m = static_cast<double>(dims.extent(m));
    flops += (10.0 / 3.0) * i_m * i_m * i_m;  // eigensolves, redundant per rank
  }

  double max_extent_sq = 0.0;
  for (int m = 0; m < n; ++m) {
    const double i_m = static_cast<double>(dims.extent(m));
    max_extent_sq = std::max(max_extent_sq, i_m * i_m);
  }
  const double memory =
      2.0 * std::max(static_cast<double>(dims.product()) / total_ranks, max_extent_sq);

  CostEstimate cost;
  cost.flops = flops;
  cost.words = words;
  cost.messages = messages;
  cost.peak_temp_words = memory;
  return cost;
}

}  // namespace tucker
