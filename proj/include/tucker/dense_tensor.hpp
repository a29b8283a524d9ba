#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tucker/shape.hpp"

namespace tucker {

/// Dense N-way tensor of doubles in natural descending layout.
///
/// Treated as immutable once filled; reads are safe from multiple workers.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

  double operator[](std::int64_t linear) const { return values_[static_cast<std::size_t>(linear)]; }
  double& operator[](std::int64_t linear) { return values_[static_cast<std::size_t>(linear)]; }

  double at(std::span<const std::int64_t> index) const;
  double& at(std::span<const std::int64_t> index);

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double sum_squares() const;
  /// Square root of the sum of squares of all elements.
  double norm() const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Zero-copy view of a mode-n unfolding.
///
/// The unfolding is `block_count` contiguous row-major submatrices of size
/// `rows x block_cols` at flat offsets b*rows*block_cols. For mode 0 the
/// blocks are single columns, so the whole view is one column-major matrix;
/// for the last mode there is a single row-major block.
class UnfoldingView {
 public:
  UnfoldingView(const DenseTensor& tensor, int mode);

  int mode() const { return mode_; }
  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return block_count_ * block_cols_; }
  std::int64_t block_count() const { return block_count_; }
  std::int64_t block_cols() const { return block_cols_; }

  /// Flat-array offset of logical entry (r, c).
  std::int64_t flat_offset(std::int64_t r, std::int64_t c) const;
  double entry(std::int64_t r, std::int64_t c) const;

  /// Pointer to row-major block b.
  const double* block(std::int64_t b) const;

  double frobenius_norm() const;

 private:
  const DenseTensor* tensor_;
  int mode_;
  std::int64_t rows_;
  std::int64_t block_cols_;
  std::int64_t block_count_;
};

/// Logical unfolding column of a multi-index with mode n removed.
std::int64_t unfolding_column(std::span<const std::int64_t> index, int mode, const Shape& shape);

}  // namespace tucker
