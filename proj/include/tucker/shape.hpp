#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tucker/errors.hpp"

namespace tucker {

/// Extents of an N-way object (tensor or processor grid), N >= 1.
///
/// Storage convention throughout is natural descending order: the mode-0
/// index varies fastest, the generalization of column-major matrices.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<std::int64_t> dims);

  int order() const { return static_cast<int>(dims_.size()); }
  std::int64_t extent(int mode) const;
  const std::vector<std::int64_t>& dims() const { return dims_; }

  /// Product of all extents.
  std::int64_t product() const;
  /// Product of extents strictly below `mode`; 1 for mode 0.
  std::int64_t product_below(int mode) const;
  /// Product of extents strictly above `mode`; 1 for the last mode.
  std::int64_t product_above(int mode) const;
  /// Product of all extents except `mode`.
  std::int64_t product_except(int mode) const;

  /// Copy with one extent replaced.
  Shape with_extent(int mode, std::int64_t extent) const;

  std::string to_string() const;

  bool operator==(const Shape& other) const = default;

 private:
  void check_mode(int mode) const;
  std::vector<std::int64_t> dims_;
};

/// Natural descending linear index of a multi-index.
std::int64_t index_to_linear(std::span<const std::int64_t> index, const Shape& shape);

/// Inverse of index_to_linear.
std::vector<std::int64_t> linear_to_index(std::int64_t linear, const Shape& shape);

}  // namespace tucker
