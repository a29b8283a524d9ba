#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tucker/dense_tensor.hpp"

namespace tucker {

/// Per-hyperslice summary statistics. A hyperslice holds every element whose
/// index in the slice mode equals a fixed value.
struct SliceStats {
  double mean = 0.0;
  double stddev = 0.0;  ///< population standard deviation
  double min = 0.0;
  double max = 0.0;
  double one_norm = 0.0;
  double two_norm = 0.0;
};

std::vector<SliceStats> slice_statistics(const DenseTensor& tensor, int slice_mode);

enum class ScalingMethod { none, standardize, max_scale };

ScalingMethod scaling_method_from_name(const std::string& name);
std::string scaling_method_name(ScalingMethod method);

/// Per-slice linear transform x' = (x - shift[k]) / scale[k].
struct SliceScaling {
  int mode = 0;
  std::vector<double> shift;
  std::vector<double> scale;
};

/// Standardize: shift by the slice mean, scale by its standard deviation.
/// Max rescale: scale by the slice's maximum absolute value. Degenerate
/// slices (zero deviation or all zeros) keep scale 1 so the transform stays
/// invertible.
SliceScaling compute_scaling(const DenseTensor& tensor, ScalingMethod method, int slice_mode);

void apply_scaling(DenseTensor& tensor, const SliceScaling& scaling);

/// Inverse transform x = x' * scale[k] + shift[k].
void invert_scaling(DenseTensor& tensor, const SliceScaling& scaling);

}  // namespace tucker
