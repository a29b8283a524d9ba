#pragma once

#include <span>

#include "tucker/comm.hpp"
#include "tucker/shape.hpp"

namespace tucker {

/// Leading-order model of a full compression run on a grid: per-rank flops
/// (Gram + eigensolve + TTM), words moved (redistribution Gram and
/// reduction-based TTM plus Gram replication), messages, and peak temporary
/// words. Mode order permutes which extents are already reduced when each
/// mode is processed.
CostEstimate plan_sthosvd_cost(const Shape& dims, std::span<const std::int64_t> ranks,
                               const Shape& grid, std::span<const int> mode_order = {});

}  // namespace tucker
