#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tucker/errors.hpp"

namespace tucker {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::int64_t rows, std::int64_t cols)
      : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows * cols), 0.0) {
    if (rows < 0 || cols < 0) throw DimensionError("matrix dimensions must be nonnegative");
  }

  static Matrix identity(std::int64_t n) {
    Matrix m(n, n);
    for (std::int64_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }

  double operator()(std::int64_t r, std::int64_t c) const {
    return values_[static_cast<std::size_t>(r * cols_ + c)];
  }
  double& operator()(std::int64_t r, std::int64_t c) {
    return values_[static_cast<std::size_t>(r * cols_ + c)];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const double* row(std::int64_t r) const { return values_.data() + r * cols_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::int64_t r = 0; r < rows_; ++r)
      for (std::int64_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<double> values_;
};

/// a * b with inner dimensions checked.
Matrix matmul(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);

/// max_{ij} |a - b| entrywise; matrices must have equal dimensions.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace tucker
