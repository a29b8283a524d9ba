#include "tucker/shape.hpp"

#include <sstream>

namespace tucker {

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) {
    throw DimensionError("shape must have at least one mode");
  }
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    if (dims_[n] < 1) {
      throw DimensionError("shape extent in mode " + std::to_string(n) +
                           " must be positive, got " + std::to_string(dims_[n]));
    }
  }
}

void Shape::check_mode(int mode) const {
  if (mode < 0 || mode >= order()) {
    throw BoundsError("mode " + std::to_string(mode) + " out of range for order " +
                      std::to_string(order()));
  }
}

std::int64_t Shape::extent(int mode) const {
  check_mode(mode);
  return dims_[static_cast<std::size_t>(mode)];
}

std::int64_t Shape::product() const {
  std::int64_t p = 1;
  for (std::int64_t d : dims_) p *= d;
  return p;
}

std::int64_t Shape::product_below(int mode) const {
  check_mode(mode);
  std::int64_t p = 1;
  for (int k = 0; k < mode; ++k) p *= dims_[static_cast<std::size_t>(k)];
  return p;
}

std::int64_t Shape::product_above(int mode) const {
  check_mode(mode);
  std::int64_t p = 1;
  for (int k = mode + 1; k < order(); ++k) p *= dims_[static_cast<std::size_t>(k)];
  return p;
}

std::int64_t Shape::product_except(int mode) const {
  return product_below(mode) * product_above(mode);
}

Shape Shape::with_extent(int mode, std::int64_t extent) const {
  check_mode(mode);
  std::vector<std::int64_t> d = dims_;
  d[static_cast<std::size_t>(mode)] = extent;
  return Shape(std::move(d));
}

std::string Shape::to_string() const {
  std::ostringstream out;
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    if (n > 0) out << "x";
    out << dims_[n];
  }
  return out.str();
}

std::int64_t index_to_linear(std::span<const std::int64_t> index, const Shape& shape) {
  if (static_cast<int>(index.size()) != shape.order()) {
    throw DimensionError("multi-index order " + std::to_string(index.size()) +
                         " does not match shape order " + std::to_string(shape.order()));
  }
  std::int64_t linear = 0;
  std::int64_t stride = 1;
  for (int n = 0; n < shape.order(); ++n) {
    const std::int64_t i = index[static_cast<std::size_t>(n)];
    if (i < 0 || i >= shape.extent(n)) {
      throw BoundsError("index " + std::to_string(i) + " out of range in mode " +
                        std::to_string(n) + " (extent " + std::to_string(shape.extent(n)) + ")");
    }
    linear += i * stride;
    stride *= shape.extent(n);
  }
  return linear;
}

std::vector<std::int64_t> linear_to_index(std::int64_t linear, const Shape& shape) {
  if (linear < 0 || linear >= shape.product()) {
    throw BoundsError("linear index " + std::to_string(linear) + " out of range for shape " +
                      shape.to_string());
  }
  std::vector<std::int64_t> index(static_cast<std::size_t>(shape.order()));
  for (int n = 0; n < shape.order(); ++n) {
    index[static_cast<std::size_t>(n)] = linear % shape.extent(n);
    linear /= shape.extent(n);
  }
  return index;
}

}  // namespace tucker
