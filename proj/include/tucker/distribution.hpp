#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tucker/dense_tensor.hpp"
#include "tucker/shape.hpp"

namespace tucker {

struct IndexRange {
  std::int64_t start = 0;
  std::int64_t length = 0;
  std::int64_t end() const { return start + length; }
  bool contains(std::int64_t i) const { return i >= start && i < start + length; }
};

/// Uneven contiguous split of `total` indices over `parts` owners: the first
/// total % parts owners get floor(total/parts)+1 indices, the rest get
/// floor(total/parts). Owners past `total` receive empty ranges.
class BlockSplit {
 public:
  BlockSplit(std::int64_t total, std::int64_t parts);

  std::int64_t total() const { return total_; }
  std::int64_t parts() const { return parts_; }

  std::int64_t length(std::int64_t part) const;
  IndexRange range(std::int64_t part) const;
  std::int64_t owner(std::int64_t index) const;
  std::int64_t to_local(std::int64_t index, std::int64_t part) const;
  std::int64_t to_global(std::int64_t local, std::int64_t part) const;

 private:
  std::int64_t total_;
  std::int64_t parts_;
  std::int64_t quotient_;
  std::int64_t remainder_;
};

/// N-way Cartesian grid of virtual ranks.
class ProcessorGrid {
 public:
  explicit ProcessorGrid(Shape dims);

  const Shape& dims() const { return dims_; }
  int order() const { return dims_.order(); }
  std::int64_t extent(int mode) const { return dims_.extent(mode); }
  int total_ranks() const { return static_cast<int>(dims_.product()); }

  std::vector<std::int64_t> coords_of(int rank) const;
  int rank_of(std::span<const std::int64_t> coords) const;

  bool operator==(const ProcessorGrid& other) const = default;

 private:
  Shape dims_;
};

/// Ranks that share all grid coordinates except mode n, ordered by their
/// mode-n coordinate. The mode-n fibers partition the grid.
std::vector<int> fiber_group(const ProcessorGrid& grid, int mode,
                             std::span<const std::int64_t> coords);

/// Ranks that share the mode-n coordinate, ordered by rank.
std::vector<int> slice_group(const ProcessorGrid& grid, int mode, std::int64_t coord);

/// Block distribution of a tensor over a processor grid, one contiguous
/// index range per rank and mode.
class BlockMap {
 public:
  /// Rejects grids with more ranks than indices in any mode.
  static BlockMap checked(Shape tensor_dims, ProcessorGrid grid);
  /// Permits empty local blocks; used for tensors shrunk below the grid.
  static BlockMap permissive(Shape tensor_dims, ProcessorGrid grid);

  const Shape& tensor_dims() const { return tensor_dims_; }
  const ProcessorGrid& grid() const { return grid_; }
  int order() const { return tensor_dims_.order(); }

  const BlockSplit& split(int mode) const;

  std::int64_t local_extent(int mode, std::int64_t coord) const;
  std::int64_t owner_of(int mode, std::int64_t global_index) const;
  IndexRange owned_range(int mode, std::int64_t coord) const;
  std::int64_t to_local(int mode, std::int64_t global_index, std::int64_t coord) const;
  std::int64_t to_global(int mode, std::int64_t local_index, std::int64_t coord) const;

  /// Local block shape of one rank. Extents may be zero for permissive maps.
  std::vector<std::int64_t> local_dims(int rank) const;
  std::int64_t local_size(int rank) const;

  /// Global linear indices owned by a rank, in local-linear order.
  std::vector<std::int64_t> owned_linear_indices(int rank) const;

  /// Same grid, one tensor extent replaced.
  BlockMap with_extent(int mode, std::int64_t extent) const;

 private:
  BlockMap(Shape tensor_dims, ProcessorGrid grid);
  Shape tensor_dims_;
  ProcessorGrid grid_;
  std::vector<BlockSplit> splits_;
};

/// Per-rank blocks of a tensor distributed by a BlockMap. Blocks with zero
/// elements are stored as empty tensors.
class DistributedTensor {
 public:
  DistributedTensor(BlockMap map, std::vector<DenseTensor> locals);

  const BlockMap& map() const { return map_; }
  int rank_count() const { return map_.grid().total_ranks(); }
  const DenseTensor& local(int rank) const { return locals_[static_cast<std::size_t>(rank)]; }
  DenseTensor& local(int rank) { return locals_[static_cast<std::size_t>(rank)]; }
  std::vector<DenseTensor>& locals() { return locals_; }

 private:
  BlockMap map_;
  std::vector<DenseTensor> locals_;
};

/// Split a full tensor into per-rank blocks. Test oracle and CLI support;
/// kernels never materialize the full tensor.
DistributedTensor scatter(const DenseTensor& full, const BlockMap& map);

/// Reassemble the full tensor; exact inverse of scatter.
DenseTensor gather(const DistributedTensor& dist);

/// Shape of one rank's block, with zero extents allowed.
Shape local_block_shape(const BlockMap& map, int rank);

}  // namespace tucker
