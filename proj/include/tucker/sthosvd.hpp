#pragma once

#include <optional>
#include <vector>

#include "tucker/comm.hpp"
#include "tucker/distribution.hpp"
#include "tucker/local_kernels.hpp"
#include "tucker/parallel_kernels.hpp"
#include "tucker/tucker_model.hpp"

namespace tucker {

/// Either a relative error tolerance or prescribed core extents.
struct CompressOptions {
  double tolerance = 0.0;
  std::optional<std::vector<std::int64_t>> fixed_ranks;
  std::vector<int> mode_order;  ///< empty means 0,1,...,N-1
};

/// Sequentially truncated factorization: per mode (in order) the Gram matrix
/// of the current partial core is decomposed, the rank is chosen against the
/// threshold tolerance^2 * ||X||^2 / N computed from the original norm, and
/// the tensor is shrunk with the truncated eigenvectors. The result satisfies
/// ||X - X_hat|| <= tolerance * ||X|| up to round-off.
TuckerModel sthosvd(const DenseTensor& tensor, const CompressOptions& options);

/// Distributed form of sthosvd over a virtual communicator. Rank choices are
/// identical to the sequential run on the gathered tensor; Gram matrices are
/// replicated bitwise so every rank decomposes the same matrix.
TuckerModel sthosvd_distributed(const DistributedTensor& dist, const CompressOptions& options,
                                VirtualComm& comm);

/// Baseline variant: every factor comes from the Gram matrix of the original
/// tensor's unfolding rather than the partial core.
TuckerModel hosvd(const DenseTensor& tensor, const CompressOptions& options);

/// Core expanded through all factor matrices, still in the preprocessed
/// domain.
DenseTensor expand_core(const TuckerModel& model);

/// Full reconstruction including the inverse of any preprocessing transform.
DenseTensor reconstruct_full(const TuckerModel& model);

/// Relative reconstruction error against the original tensor, measured in
/// the original domain.
double reconstruction_error(const DenseTensor& original, const TuckerModel& model);

/// Relative error in the domain compression ran (after preprocessing).
double preprocessed_error(const DenseTensor& original, const TuckerModel& model);

/// Residual term per processed mode, in mode-order position: the squared
/// norm of the partial core's component outside the span of that mode's
/// factor. The terms sum to the squared reconstruction error.
std::vector<double> error_decomposition(const DenseTensor& original, const TuckerModel& model);

}  // namespace tucker
