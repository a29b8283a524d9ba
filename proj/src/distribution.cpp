#include "tucker/distribution.hpp"

#include <string>

namespace tucker {

BlockSplit::BlockSplit(std::int64_t total, std::int64_t parts)
    : total_(total), parts_(parts), quotient_(total / parts), remainder_(total % parts) {
  if (total < 0 || parts < 1) {
    throw DimensionError("invalid block split of " + std::to_string(total) + " over " +
                         std::to_string(parts));
  }
}

std::int64_t BlockSplit::length(std::int64_t part) const {
  if (part < 0 || part >= parts_) {
    throw BoundsError("split part " + std::to_string(part) + " out of range");
  }
  return part < remainder_ ? quotient_ + 1 : quotient_;
}

IndexRange BlockSplit::range(std::int64_t part) const {
  return {part * quotient_ + std::min(part, remainder_), length(part)};
}

std::int64_t BlockSplit::owner(std::int64_t index) const {
  if (index < 0 || index >= total_) {
    throw BoundsError("split index " + std::to_string(index) + " out of range for total " +
                      std::to_string(total_));
  }
  const std::int64_t boundary = remainder_ * (quotient_ + 1);
  if (index < boundary) return index / (quotient_ + 1);
  return (index - boundary) / quotient_ + remainder_;
}

std::int64_t BlockSplit::to_local(std::int64_t index, std::int64_t part) const {
  const IndexRange r = range(part);
  if (!r.contains(index)) {
    throw OwnershipError("index " + std::to_string(index) + " is not owned by part " +
                         std::to_string(part));
  }
  return index - r.start;
}

std::int64_t BlockSplit::to_global(std::int64_t local, std::int64_t part) const {
  const IndexRange r = range(part);
  if (local < 0 || local >= r.length) {
    throw BoundsError("local index " + std::to_string(local) + " out of range for part " +
                      std::to_string(part));
  }
  return local + r.start;
}

ProcessorGrid::ProcessorGrid(Shape dims) : dims_(std::move(dims)) {}

std::vector<std::int64_t> ProcessorGrid::coords_of(int rank) const {
  return linear_to_index(rank, dims_);
}

int ProcessorGrid::rank_of(std::span<const std::int64_t> coords) const {
  return static_cast<int>(index_to_linear(coords, dims_));
}

std::vector<int> fiber_group(const ProcessorGrid& grid, int mode,
                             std::span<const std::int64_t> coords) {
  std::vector<std::int64_t> c(coords.begin(), coords.end());
  std::vector<int> group;
  group.reserve(static_cast<std::size_t>(grid.extent(mode)));
  for (std::int64_t p = 0; p < grid.extent(mode); ++p) {
    c[static_cast<std::size_t>(mode)] = p;
    group.push_back(grid.rank_of(c));
  }
  return group;
}

std::vector<int> slice_group(const ProcessorGrid& grid, int mode, std::int64_t coord) {
  std::vector<int> group;
  for (int r = 0; r < grid.total_ranks(); ++r) {
    if (grid.coords_of(r)[static_cast<std::size_t>(mode)] == coord) group.push_back(r);
  }
  return group;
}

BlockMap::BlockMap(Shape tensor_dims, ProcessorGrid grid)
    : tensor_dims_(std::move(tensor_dims)), grid_(std::move(grid)) {
  if (tensor_dims_.order() != grid_.order()) {
    throw DimensionError("tensor order " + std::to_string(tensor_dims_.order()) +
                         " does not match grid order " + std::to_string(grid_.order()));
  }
  splits_.reserve(static_cast<std::size_t>(tensor_dims_.order()));
  for (int n = 0; n < tensor_dims_.order(); ++n) {
    splits_.emplace_back(tensor_dims_.extent(n), grid_.extent(n));
  }
}

BlockMap BlockMap::checked(Shape tensor_dims, ProcessorGrid grid) {
  for (int n = 0; n < tensor_dims.order() && n < grid.order(); ++n) {
    if (grid.extent(n) > tensor_dims.extent(n)) {
      throw DimensionError("grid extent " + std::to_string(grid.extent(n)) + " exceeds tensor extent " +
                           std::to_string(tensor_dims.extent(n)) + " in mode " + std::to_string(n));
    }
  }
  return BlockMap(std::move(tensor_dims), std::move(grid));
}

BlockMap BlockMap::permissive(Shape tensor_dims, ProcessorGrid grid) {
  return BlockMap(std::move(tensor_dims), std::move(grid));
}

const BlockSplit& BlockMap::split(int mode) const {
  if (mode < 0 || mode >= order()) throw BoundsError("mode " + std::to_string(mode) + " out of range");
  return splits_[static_cast<std::size_t>(mode)];
}

std::int64_t BlockMap::local_extent(int mode, std::int64_t coord) const {
  return split(mode).length(coord);
}

std::int64_t BlockMap::owner_of(int mode, std::int64_t global_index) const {
  return split(mode).owner(global_index);
}

IndexRange BlockMap::owned_range(int mode, std::int64_t coord) const {
  return split(mode).range(coord);
}

std::int64_t BlockMap::to_local(int mode, std::int64_t global_index, std::int64_t coord) const {
  return split(mode).to_local(global_index, coord);
}

std::int64_t BlockMap::to_global(int mode, std::int64_t local_index, std::int64_t coord) const {
  return split(mode).to_global(local_index, coord);
}

std::vector<std::int64_t> BlockMap::local_dims(int rank) const {
  const std::vector<std::int64_t> coords = grid_.coords_of(rank);
  std::vector<std::int64_t> dims(static_cast<std::size_t>(order()));
  for (int n = 0; n < order(); ++n) {
    dims[static_cast<std::size_t>(n)] = local_extent(n, coords[static_cast<std::size_t>(n)]);
  }
  return dims;
}

std::int64_t BlockMap::local_size(int rank) const {
  std::int64_t p = 1;
  for (std::int64_t d : local_dims(rank)) p *= d;
  return p;
}

std::vector<std::int64_t> BlockMap::owned_linear_indices(int rank) const {
  const std::vector<std::int64_t> coords = grid_.coords_of(rank);
  const std::int64_t count = local_size(rank);
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 0) return out;
  const Shape local(local_dims(rank));
  std::vector<std::int64_t> global_index(static_cast<std::size_t>(order()));
  for (std::int64_t lin = 0; lin < count; ++lin) {
    const std::vector<std::int64_t> local_index = linear_to_index(lin, local);
    for (int n = 0; n < order(); ++n) {
      global_index[static_cast<std::size_t>(n)] =
          to_global(n, local_index[static_cast<std::size_t>(n)], coords[static_cast<std::size_t>(n)]);
    }
    out.push_back(index_to_linear(global_index, tensor_dims_));
  }
  return out;
}

BlockMap BlockMap::with_extent(int mode, std::int64_t extent) const {
  return BlockMap::permissive(tensor_dims_.with_extent(mode, extent), grid_);
}

DistributedTensor::DistributedTensor(BlockMap map, std::vector<DenseTensor> locals)
    : map_(std::move(map)), locals_(std::move(locals)) {
  if (static_cast<int>(locals_.size()) != map_.grid().total_ranks()) {
    throw DimensionError("distributed tensor needs one block per rank");
  }
  for (int r = 0; r < map_.grid().total_ranks(); ++r) {
    if (locals_[static_cast<std::size_t>(r)].size() != map_.local_size(r)) {
      throw DimensionError("rank " + std::to_string(r) + " block has " +
                           std::to_string(locals_[static_cast<std::size_t>(r)].size()) +
                           " elements, expected " + std::to_string(map_.local_size(r)));
    }
  }
}

Shape local_block_shape(const BlockMap& map, int rank) {
  return Shape(map.local_dims(rank));
}

DistributedTensor scatter(const DenseTensor& full, const BlockMap& map) {
  if (full.shape() != map.tensor_dims()) {
    throw DimensionError("scatter shape " + full.shape().to_string() + " does not match map " +
                         map.tensor_dims().to_string());
  }
  std::vector<DenseTensor> locals;
  locals.reserve(static_cast<std::size_t>(map.grid().total_ranks()));
  for (int r = 0; r < map.grid().total_ranks(); ++r) {
    if (map.local_size(r) == 0) {
      locals.emplace_back();
      continue;
    }
    DenseTensor block(local_block_shape(map, r));
    const std::vector<std::int64_t> owned = map.owned_linear_indices(r);
    for (std::int64_t lin = 0; lin < block.size(); ++lin) {
      block[lin] = full[owned[static_cast<std::size_t>(lin)]];
    }
    locals.push_back(std::move(block));
  }
  return DistributedTensor(map, std::move(locals));
}

DenseTensor gather(const DistributedTensor& dist) {
  const BlockMap& map = dist.map();
  DenseTensor full(map.tensor_dims());
  for (int r = 0; r < map.grid().total_ranks(); ++r) {
    if (map.local_size(r) == 0) continue;
    const DenseTensor& block = dist.local(r);
    const std::vector<std::int64_t> owned = map.owned_linear_indices(r);
    for (std::int64_t lin = 0; lin < block.size(); ++lin) {
      full[owned[static_cast<std::size_t>(lin)]] = block[lin];
    }
  }
  return full;
}

}  // namespace tucker
