#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tucker/dense_tensor.hpp"
#include "tucker/matrix.hpp"
#include "tucker/preprocess.hpp"

namespace tucker {

/// Compressed representation: core tensor, one orthonormal-column factor
/// matrix per mode, optional per-slice shift/scale vectors, and metadata.
struct TuckerModel {
  Shape source_dims;
  DenseTensor core;
  std::vector<Matrix> factors;  ///< factor n is source_dims[n] x core_dims[n]

  ScalingMethod method = ScalingMethod::none;
  std::optional<SliceScaling> scaling;

  double tolerance = 0.0;
  double norm_x = 0.0;  ///< norm of the (preprocessed) source tensor
  std::vector<int> mode_order;
  double achieved_relative_error = 0.0;  ///< in the domain compression ran
  std::vector<std::vector<double>> spectra;  ///< per-mode eigenvalues, descending

  std::string generator;  ///< non-empty when the source was synthetic
  std::uint64_t seed = 0;

  Shape core_dims() const { return core.shape(); }
  int order() const { return source_dims.order(); }
};

struct StorageAccounting {
  std::int64_t elements = 0;  ///< core + factors + scaling vectors
  std::int64_t bytes = 0;     ///< at 8 bytes per element
  double compression_ratio = 0.0;
};

StorageAccounting storage_accounting(const TuckerModel& model);

/// Throws NumericalError unless every factor has orthonormal columns.
void check_factor_orthonormality(const TuckerModel& model, double tolerance = 1e-12);

}  // namespace tucker
