#include "tucker/preprocess.hpp"

#include <cmath>
#include <limits>

namespace tucker {

namespace {

// Visits every element of the mode-n hyperslice with index k; the slice
// layout mirrors the unfolding row stride.
template <typename Fn>
void for_each_in_slice(const DenseTensor& tensor, int mode, std::int64_t k, Fn&& fn) {
  const Shape& shape = tensor.shape();
  const std::int64_t below = shape.product_below(mode);
  const std::int64_t above = shape.product_above(mode);
  const std::int64_t extent = shape.extent(mode);
  for (std::int64_t b = 0; b < above; ++b) {
    const std::int64_t base = (b * extent + k) * below;
    for (std::int64_t c = 0; c < below; ++c) fn(base + c);
  }
}

}  // namespace

std::vector<SliceStats> slice_statistics(const DenseTensor& tensor, int slice_mode) {
  const std::int64_t extent = tensor.shape().extent(slice_mode);
  const std::int64_t slice_size = tensor.shape().product_except(slice_mode);
  std::vector<SliceStats> stats(static_cast<std::size_t>(extent));
  for (std::int64_t k = 0; k < extent; ++k) {
    SliceStats& s = stats[static_cast<std::size_t>(k)];
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0, sum_sq = 0.0, sum_abs = 0.0;
    for_each_in_slice(tensor, slice_mode, k, [&](std::int64_t i) {
      const double v = tensor[i];
      sum += v;
      sum_sq += v * v;
      sum_abs += std::abs(v);
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    });
    const double count = static_cast<double>(slice_size);
    s.mean = sum / count;
    const double variance = std::max(0.0, sum_sq / count - s.mean * s.mean);
    s.stddev = std::sqrt(variance);
    s.one_norm = sum_abs;
    s.two_norm = std::sqrt(sum_sq);
  }
  return stats;
}

ScalingMethod scaling_method_from_name(const std::string& name) {
  if (name == "none") return ScalingMethod::none;
  if (name == "standardize") return ScalingMethod::standardize;
  if (name == "maxscale") return ScalingMethod::max_scale;
  throw DimensionError("unknown preprocessing method '" + name + "'");
}

std::string scaling_method_name(ScalingMethod method) {
  switch (method) {
    case ScalingMethod::none: return "none";
    case ScalingMethod::standardize: return "standardize";
    case ScalingMethod::max_scale: return "maxscale";
  }
  return "none";
}

SliceScaling compute_scaling(const DenseTensor& tensor, ScalingMethod method, int slice_mode) {
  const std::vector<SliceStats> stats = slice_statistics(tensor, slice_mode);
  SliceScaling scaling;
  scaling.mode = slice_mode;
  scaling.shift.resize(stats.size(), 0.0);
  scaling.scale.resize(stats.size(), 1.0);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    switch (method) {
      case ScalingMethod::none:
        break;
      case ScalingMethod::standardize:
        scaling.shift[k] = stats[k].mean;
        scaling.scale[k] = stats[k].stddev > 0.0 ? stats[k].stddev : 1.0;
        break;
      case ScalingMethod::max_scale: {
        const double peak = std::max(std::abs(stats[k].min), std::abs(stats[k].max));
        scaling.scale[k] = peak > 0.0 ? peak : 1.0;
        break;
      }
    }
  }
  return scaling;
}

void apply_scaling(DenseTensor& tensor, const SliceScaling& scaling) {
  const std::int64_t extent = tensor.shape().extent(scaling.mode);
  if (static_cast<std::int64_t>(scaling.shift.size()) != extent) {
    throw DimensionError("scaling vectors do not match tensor extent in mode " +
                         std::to_string(scaling.mode));
  }
  for (std::int64_t k = 0; k < extent; ++k) {
    const double shift = scaling.shift[static_cast<std::size_t>(k)];
    const double scale = scaling.scale[static_cast<std::size_t>(k)];
    for_each_in_slice(tensor, scaling.mode, k,
                      [&](std::int64_t i) { tensor[i] = (tensor[i] - shift) / scale; });
  }
}

void invert_scaling(DenseTensor& tensor, const SliceScaling& scaling) {
  const std::int64_t extent = tensor.shape().extent(scaling.mode);
  if (static_cast<std::int64_t>(scaling.shift.size()) != extent) {
    throw DimensionError("scaling vectors do not match tensor extent in mode " +
                         std::to_string(scaling.mode));
  }
  for (std::int64_t k = 0; k < extent; ++k) {
    const double shift = scaling.shift[static_cast<std::size_t>(k)];
    const double scale = scaling.scale[static_cast<std::size_t>(k)];
    for_each_in_slice(tensor, scaling.mode, k,
                      [&](std::int64_t i) { tensor[i] = tensor[i] * scale + shift; });
  }
}

}  // namespace tucker
