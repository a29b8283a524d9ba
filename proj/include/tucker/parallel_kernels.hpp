#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tucker/comm.hpp"
#include "tucker/distribution.hpp"
#include "tucker/local_kernels.hpp"

namespace tucker {

enum class PackCase { mode0, middle, last_mode };

PackCase pack_case_for(int mode, int order);

/// Buffer arranged as one contiguous segment per destination rank.
struct PackedBuffer {
  PackCase layout_case = PackCase::mode0;
  bool identity = false;  ///< bytes equal the source array (no reordering)
  std::vector<double> values;
  std::vector<std::int64_t> segment_lengths;
};

/// Packs a local block for the within-fiber All-to-All that turns the block
/// row distribution of the mode-n unfolding into a block column distribution.
///
/// Destination ℓ owns a contiguous share of the local unfolding columns
/// (uneven split of the column count over the fiber). For mode 0 the local
/// unfolding is already column-major, so the buffer is a pure copy; for
/// middle modes every row-major block is transposed so each local mode-n
/// fiber becomes contiguous; for the last mode each row is cut into chunks
/// and row order is kept, so the receiver needs no unpacking.
PackedBuffer pack_for_all_to_all(const DenseTensor& local, int mode, std::int64_t fiber_size);

/// Matrix of complete global mode-n fibers held by one rank after the
/// All-to-All. Column order is the local column order of the senders, a
/// fixed permutation of the matricized order.
struct FiberMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  bool row_major = false;
  bool unchanged = false;  ///< buffer used as-is (last-mode case)
  std::vector<double> values;

  double entry(std::int64_t r, std::int64_t c) const {
    return row_major ? values[static_cast<std::size_t>(r * cols + c)]
                     : values[static_cast<std::size_t>(c * rows + r)];
  }
};

/// Reassembles received chunks into whole mode-n fibers. chunk_rows holds the
/// mode-n extent contributed by each fiber member, in fiber order.
FiberMatrix unpack_after_all_to_all(std::span<const double> buffer, int mode, int order,
                                    std::span<const std::int64_t> chunk_rows, std::int64_t cols);

/// Reorders a local mode-n product (mode-n extent K) into fiber_size
/// contiguous subblocks, subblock ℓ holding the mode-n rows owned by fiber
/// member ℓ under the uneven split of K. Subblock ℓ is exactly member ℓ's
/// local output block in natural descending layout. Identity for the last
/// mode and for a singleton fiber.
PackedBuffer pack_for_reduce_scatter(const DenseTensor& local_product, int mode,
                                     std::int64_t fiber_size);

/// Gram matrix of the distributed tensor's mode-n unfolding, replicated
/// bitwise on every rank: All-to-All within the mode-n fiber, local Gram of
/// the resulting 1D column distribution, then an All-Reduce over all ranks.
Matrix par_gram_rank(const DenseTensor& local, const BlockMap& map, int mode, RankContext& ctx);
Matrix par_gram(const DistributedTensor& dist, int mode, VirtualComm& comm);

enum class TtmVariant { auto_rule, reduce_scatter, multiple_reduction };

/// True when the reduce-scatter variant is selected: K <= floor(J_n / P_n).
bool ttm_selects_reduce_scatter(std::int64_t k, std::int64_t j_n, std::int64_t p_n);

/// Distributed TTM with a replicated K x J_n matrix; the result keeps the
/// same grid with mode-n ownership recomputed for extent K. Each rank uses
/// only the column block of v matching its owned mode-n indices.
DenseTensor par_ttm_rank(const DenseTensor& local, const BlockMap& map, int mode, const Matrix& v,
                         RankContext& ctx, TtmVariant variant = TtmVariant::auto_rule);
DistributedTensor par_ttm(const DistributedTensor& dist, int mode, const Matrix& v,
                          VirtualComm& comm, TtmVariant variant = TtmVariant::auto_rule);

/// Norm of the distributed tensor via one scalar All-Reduce.
double dist_norm_rank(const DenseTensor& local, RankContext& ctx);
double dist_norm(const DistributedTensor& dist, VirtualComm& comm);

}  // namespace tucker
