#include "tucker/dense_tensor.hpp"

#include <cmath>

namespace tucker {

DenseTensor::DenseTensor(Shape shape)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(shape_.product()), 0.0) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (static_cast<std::int64_t>(values_.size()) != shape_.product()) {
    throw DimensionError("value count " + std::to_string(values_.size()) +
                         " does not match shape " + shape_.to_string());
  }
}

double DenseTensor::at(std::span<const std::int64_t> index) const {
  return values_[static_cast<std::size_t>(index_to_linear(index, shape_))];
}

double& DenseTensor::at(std::span<const std::int64_t> index) {
  return values_[static_cast<std::size_t>(index_to_linear(index, shape_))];
}

double DenseTensor::sum_squares() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

double DenseTensor::norm() const { return std::sqrt(sum_squares()); }

UnfoldingView::UnfoldingView(const DenseTensor& tensor, int mode)
    : tensor_(&tensor),
      mode_(mode),
      rows_(tensor.shape().extent(mode)),
      block_cols_(tensor.shape().product_below(mode)),
      block_count_(tensor.shape().product_above(mode)) {}

std::int64_t UnfoldingView::flat_offset(std::int64_t r, std::int64_t c) const {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols()) {
    throw BoundsError("unfolding entry (" + std::to_string(r) + "," + std::to_string(c) +
                      ") out of range");
  }
  const std::int64_t b = c / block_cols_;
  const std::int64_t cc = c % block_cols_;
  return b * rows_ * block_cols_ + r * block_cols_ + cc;
}

double UnfoldingView::entry(std::int64_t r, std::int64_t c) const {
  return (*tensor_)[flat_offset(r, c)];
}

const double* UnfoldingView::block(std::int64_t b) const {
  return tensor_->values().data() + b * rows_ * block_cols_;
}

double UnfoldingView::frobenius_norm() const { return tensor_->norm(); }

std::int64_t unfolding_column(std::span<const std::int64_t> index, int mode, const Shape& shape) {
  std::int64_t col = 0;
  for (int k = 0; k < shape.order(); ++k) {
    if (k == mode) continue;
    const std::int64_t stride =
        k < mode ? shape.product_below(k) : shape.product_below(k) / shape.extent(mode);
    col += index[static_cast<std::size_t>(k)] * stride;
  }
  return col;
}

}  // namespace tucker
