#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "tucker/dense_tensor.hpp"
#include "tucker/matrix.hpp"

namespace tucker::testing {

inline DenseTensor linear_index_tensor(std::vector<std::int64_t> dims) {
  Shape shape(std::move(dims));
  DenseTensor t(shape);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  return t;
}

inline DenseTensor random_tensor(std::vector<std::int64_t> dims, std::mt19937_64& rng) {
  Shape shape(std::move(dims));
  DenseTensor t(shape);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

inline Matrix random_matrix(std::int64_t rows, std::int64_t cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

// Gram-Schmidt columns of a random matrix; rows >= cols.
inline Matrix random_orthonormal(std::int64_t rows, std::int64_t cols, std::mt19937_64& rng) {
  Matrix m = random_matrix(rows, cols, rng);
  for (std::int64_t c = 0; c < cols; ++c) {
    for (std::int64_t prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (std::int64_t r = 0; r < rows; ++r) dot += m(r, c) * m(r, prev);
      for (std::int64_t r = 0; r < rows; ++r) m(r, c) -= dot * m(r, prev);
    }
    double norm = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) norm += m(r, c) * m(r, c);
    norm = std::sqrt(norm);
    for (std::int64_t r = 0; r < rows; ++r) m(r, c) /= norm;
  }
  return m;
}

// Independent unfolding map: column index of a multi-index with the mode
// removed, written out from the definition rather than the view descriptors.
inline std::int64_t oracle_unfold_column(std::span<const std::int64_t> index, int mode,
                                         const Shape& shape) {
  std::int64_t col = 0;
  std::int64_t stride_below = 1;
  for (int k = 0; k < mode; ++k) {
    col += index[static_cast<std::size_t>(k)] * stride_below;
    stride_below *= shape.extent(k);
  }
  std::int64_t stride_above = stride_below;  // skip the mode itself
  for (int k = mode + 1; k < shape.order(); ++k) {
    col += index[static_cast<std::size_t>(k)] * stride_above;
    stride_above *= shape.extent(k);
  }
  return col;
}

// Dense unfolding built element by element through the index map.
inline Matrix oracle_unfolding(const DenseTensor& tensor, int mode) {
  const Shape& shape = tensor.shape();
  Matrix m(shape.extent(mode), shape.product_except(mode));
  for (std::int64_t lin = 0; lin < tensor.size(); ++lin) {
    const std::vector<std::int64_t> index = linear_to_index(lin, shape);
    m(index[static_cast<std::size_t>(mode)], oracle_unfold_column(index, mode, shape)) =
        tensor[lin];
  }
  return m;
}

inline Matrix oracle_gram(const DenseTensor& tensor, int mode) {
  const Matrix m = oracle_unfolding(tensor, mode);
  Matrix s(m.rows(), m.rows());
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    for (std::int64_t j = 0; j < m.rows(); ++j) {
      double acc = 0.0;
      for (std::int64_t c = 0; c < m.cols(); ++c) acc += m(i, c) * m(j, c);
      s(i, j) = acc;
    }
  }
  return s;
}

// Direct multi-index TTM, independent of the blockwise kernel.
inline DenseTensor oracle_ttm(const DenseTensor& tensor, int mode, const Matrix& v) {
  const Shape out_shape = tensor.shape().with_extent(mode, v.rows());
  DenseTensor out(out_shape);
  for (std::int64_t lin = 0; lin < out.size(); ++lin) {
    std::vector<std::int64_t> index = linear_to_index(lin, out_shape);
    double acc = 0.0;
    for (std::int64_t q = 0; q < tensor.shape().extent(mode); ++q) {
      const double w = v(index[static_cast<std::size_t>(mode)], q);
      if (w == 0.0) continue;
      std::vector<std::int64_t> src = index;
      src[static_cast<std::size_t>(mode)] = q;
      acc += w * tensor.at(src);
    }
    out[lin] = acc;
  }
  return out;
}

inline double max_abs_tensor_diff(const DenseTensor& a, const DenseTensor& b) {
  double d = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double relative_tensor_diff(const DenseTensor& a, const DenseTensor& b) {
  double diff_sq = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    diff_sq += d * d;
  }
  const double norm = a.norm();
  return norm == 0.0 ? std::sqrt(diff_sq) : std::sqrt(diff_sq) / norm;
}

inline bool bitwise_equal(const DenseTensor& a, const DenseTensor& b) {
  if (a.size() != b.size()) return false;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace tucker::testing
