#include "tucker/local_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tucker {

namespace {

constexpr double kJacobiTolerance = 1e-14;
constexpr int kJacobiMaxSweeps = 30;

// Accumulates B * B^T for one row-major block of size rows x cols into the
// upper triangle of s.
void accumulate_gram_block(const double* block, std::int64_t rows, std::int64_t cols, Matrix& s) {
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* bi = block + i * cols;
    for (std::int64_t j = i; j < rows; ++j) {
      const double* bj = block + j * cols;
      double acc = 0.0;
      for (std::int64_t c = 0; c < cols; ++c) acc += bi[c] * bj[c];
      s(i, j) += acc;
    }
  }
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

Matrix gram(const DenseTensor& tensor, int mode) {
  const UnfoldingView view(tensor, mode);
  const std::int64_t j_n = view.rows();
  Matrix s(j_n, j_n);

  if (mode == 0) {
    // Column-major J_0 x C: one symmetric rank-C update.
    const double* data = tensor.values().data();
    const std::int64_t cols = view.cols();
    for (std::int64_t c = 0; c < cols; ++c) {
      const double* col = data + c * j_n;
      for (std::int64_t i = 0; i < j_n; ++i) {
        const double vi = col[i];
        if (vi == 0.0) continue;
        for (std::int64_t j = i; j < j_n; ++j) s(i, j) += vi * col[j];
      }
    }
  } else {
    for (std::int64_t b = 0; b < view.block_count(); ++b) {
      accumulate_gram_block(view.block(b), j_n, view.block_cols(), s);
    }
  }

  for (std::int64_t i = 0; i < j_n; ++i)
    for (std::int64_t j = 0; j < i; ++j) s(i, j) = s(j, i);
  return s;
}

DenseTensor ttm(const DenseTensor& tensor, int mode, const Matrix& v) {
  const Shape& shape = tensor.shape();
  const std::int64_t j_n = shape.extent(mode);
  if (v.cols() != j_n) {
    throw DimensionError("ttm mode " + std::to_string(mode) + ": matrix has " +
                         std::to_string(v.cols()) + " columns but tensor extent is " +
                         std::to_string(j_n));
  }
  const std::int64_t k = v.rows();
  DenseTensor out(shape.with_extent(mode, k));

  const std::int64_t block_cols = shape.product_below(mode);
  const std::int64_t block_count = shape.product_above(mode);
  const double* y = tensor.values().data();
  double* z = out.values().data();

  if (mode == 0) {
    // Column-major: each output column is V times the input column.
    const std::int64_t cols = shape.product_except(0);
    for (std::int64_t c = 0; c < cols; ++c) {
      const double* yc = y + c * j_n;
      double* zc = z + c * k;
      for (std::int64_t r = 0; r < k; ++r) {
        const double* vr = v.row(r);
        double acc = 0.0;
        for (std::int64_t q = 0; q < j_n; ++q) acc += vr[q] * yc[q];
        zc[r] = acc;
      }
    }
  } else {
    // Row-major blocks: Z_b = V * Y_b per block.
    for (std::int64_t b = 0; b < block_count; ++b) {
      const double* yb = y + b * j_n * block_cols;
      double* zb = z + b * k * block_cols;
      for (std::int64_t r = 0; r < k; ++r) {
        const double* vr = v.row(r);
        double* zr = zb + r * block_cols;
        for (std::int64_t c = 0; c < block_cols; ++c) zr[c] = 0.0;
        for (std::int64_t q = 0; q < j_n; ++q) {
          const double vq = vr[q];
          if (vq == 0.0) continue;
          const double* yr = yb + q * block_cols;
          for (std::int64_t c = 0; c < block_cols; ++c) zr[c] += vq * yr[c];
        }
      }
    }
  }
  return out;
}

EigenDecomposition sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) throw DimensionError("sym_eig requires a square matrix");
  const std::int64_t n = s.rows();
  Matrix a = s;
  Matrix v = Matrix::identity(n);

  const double tol = kJacobiTolerance * frobenius_norm(s);
  double off = off_diagonal_norm(a);
  int sweep = 0;
  while (off > tol && sweep < kJacobiMaxSweeps) {
    for (std::int64_t p = 0; p < n - 1; ++p) {
      for (std::int64_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        // Smaller-magnitude root of t^2 + 2 t theta - 1 = 0.
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;

        for (std::int64_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::int64_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::int64_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
    off = off_diagonal_norm(a);
    ++sweep;
  }
  if (off > tol) {
    throw NumericalError("jacobi eigensolver did not converge after " +
                         std::to_string(kJacobiMaxSweeps) + " sweeps; off-diagonal residual " +
                         std::to_string(off));
  }

  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&a](std::int64_t i, std::int64_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors = Matrix(n, n);
  for (std::int64_t k = 0; k < n; ++k) {
    const std::int64_t src = perm[static_cast<std::size_t>(k)];
    out.values[static_cast<std::size_t>(k)] = a(src, src);

    // Sign convention: largest-magnitude component positive, ties to the
    // lowest index.
    std::int64_t arg = 0;
    double best = std::abs(v(0, src));
    for (std::int64_t r = 1; r < n; ++r) {
      const double m = std::abs(v(r, src));
      if (m > best) {
        best = m;
        arg = r;
      }
    }
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::int64_t r = 0; r < n; ++r) out.vectors(r, k) = sign * v(r, src);
  }
  return out;
}

std::int64_t select_rank(std::span<const double> values, double threshold) {
  const std::int64_t j = static_cast<std::int64_t>(values.size());
  if (j == 0) throw DimensionError("select_rank requires at least one eigenvalue");
  // tail[r] = sum of clamped values with index >= r.
  std::vector<double> tail(static_cast<std::size_t>(j) + 1, 0.0);
  for (std::int64_t i = j - 1; i >= 0; --i) {
    tail[static_cast<std::size_t>(i)] = tail[static_cast<std::size_t>(i) + 1] +
                                        std::max(values[static_cast<std::size_t>(i)], 0.0);
  }
  for (std::int64_t r = 1; r <= j; ++r) {
    if (tail[static_cast<std::size_t>(r)] <= threshold) return r;
  }
  return j;
}

Matrix leading_vectors(const EigenDecomposition& eig, std::int64_t count) {
  const std::int64_t n = eig.vectors.rows();
  if (count < 1 || count > n) {
    throw BoundsError("leading_vectors count " + std::to_string(count) + " out of range");
  }
  Matrix u(n, count);
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t c = 0; c < count; ++c) u(r, c) = eig.vectors(r, c);
  return u;
}

}  // namespace tucker
