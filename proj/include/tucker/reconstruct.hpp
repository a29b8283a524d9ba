#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tucker/matrix.hpp"
#include "tucker/tucker_model.hpp"

namespace tucker {

/// Per-mode sampling operator applied during partial reconstruction.
struct ModeSelector {
  enum class Kind { full, single_index, range, downsample_mean, sum_all, matrix };

  Kind kind = Kind::full;
  std::int64_t index = 0;               // single_index
  std::int64_t start = 0, stop = 0, stride = 1;  // range, half-open
  std::int64_t factor = 1;              // downsample_mean
  Matrix explicit_matrix;               // matrix

  static ModeSelector full();
  static ModeSelector single(std::int64_t index);
  static ModeSelector range(std::int64_t start, std::int64_t stop, std::int64_t stride);
  static ModeSelector downsample(std::int64_t factor);
  static ModeSelector sum();
  static ModeSelector matrix(Matrix m);

  std::int64_t output_extent(std::int64_t source_extent) const;
};

/// Selector as an explicit K x I matrix. A full selector yields the
/// identity; a trailing downsample window shorter than the factor averages
/// over its actual length.
Matrix build_selector(const ModeSelector& selector, std::int64_t extent);

enum class OrderingObjective { flops, bandwidth, memory };

/// Element counts of the core and each successive product when the modes are
/// applied in the given order (core extent replaced by the output extent one
/// mode at a time); N+1 entries.
std::vector<std::int64_t> intermediate_sizes(std::span<const std::int64_t> core_dims,
                                             std::span<const std::int64_t> out_dims,
                                             std::span<const int> order);

/// Mode order minimizing the objective over all N! permutations, found by a
/// stable pairwise-comparator sort. The bandwidth objective needs the
/// per-mode grid extents.
std::vector<int> optimal_order(std::span<const std::int64_t> core_dims,
                               std::span<const std::int64_t> out_dims, OrderingObjective objective,
                               std::span<const std::int64_t> grid_dims = {});

/// Objective value of one order: total scalar multiplications (flops), total
/// words moved scaled by the grid (bandwidth), or the largest intermediate
/// element count (memory).
double ordering_objective_value(std::span<const std::int64_t> core_dims,
                                std::span<const std::int64_t> out_dims,
                                std::span<const int> order, OrderingObjective objective,
                                std::span<const std::int64_t> grid_dims = {});

struct PartialReconstructOptions {
  std::vector<int> order;              ///< empty means 0,1,...,N-1
  std::int64_t memory_cap_bytes = 0;   ///< 0 means 4 * max(input, output)
};

struct PartialResult {
  DenseTensor tensor;                      ///< post-processed output
  std::vector<int> order;
  std::vector<std::int64_t> planned_sizes;  ///< element counts along the chain
  std::int64_t peak_intermediate_elements = 0;  ///< largest tensor held after a step
  std::int64_t peak_workspace_elements = 0;     ///< largest input+output pair during a step
};

/// Applies selector-times-factor products (each K_n x R_n, computed first)
/// through a TTM chain in the given order. The plan is checked against the
/// memory cap before any tensor work starts; a violation throws BoundsError
/// naming the offending intermediate shape.
PartialResult partial_reconstruct(const TuckerModel& model,
                                  const std::vector<ModeSelector>& selectors,
                                  const PartialReconstructOptions& options = {});

}  // namespace tucker

#include "tucker/comm.hpp"
#include "tucker/distribution.hpp"

namespace tucker {

/// Full reconstruction as a distributed TTM chain: the core is block
/// distributed on the grid (possibly with empty ranks), expanded mode by
/// mode with the factor matrices, and post-processed blockwise. The result
/// is block distributed for the source dims.
DistributedTensor reconstruct_full_distributed(const TuckerModel& model,
                                               const ProcessorGrid& grid, VirtualComm& comm,
                                               std::span<const int> order = {});

}  // namespace tucker
