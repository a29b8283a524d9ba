#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tucker/dense_tensor.hpp"
#include "tucker/matrix.hpp"

namespace tucker {

/// Gram matrix S = Y_(n) * Y_(n)^T of the mode-n unfolding.
///
/// Works blockwise on the native unfolding layout: a single symmetric
/// rank-update of the column-major view for mode 0, otherwise one update per
/// row-major block column, accumulated in block order. The result is exactly
/// symmetric (upper triangle computed, then mirrored).
Matrix gram(const DenseTensor& tensor, int mode);

/// Tensor-times-matrix: Z = Y x_n V with V of size K x J_n.
///
/// Mode-n extent J_n is replaced by K. Computed blockwise: one column-major
/// multiply for mode 0, per-block row-major multiplies otherwise.
DenseTensor ttm(const DenseTensor& tensor, int mode, const Matrix& v);

struct EigenDecomposition {
  std::vector<double> values;  ///< descending, ties stable by original index
  Matrix vectors;              ///< column k pairs with values[k]; orthogonal
};

/// Full symmetric eigendecomposition via cyclic Jacobi sweeps.
///
/// Stops when the off-diagonal Frobenius norm drops below 1e-14 * ||S||_F;
/// throws NumericalError with the residual if 30 sweeps do not suffice.
/// Each eigenvector is scaled so its largest-magnitude component (lowest
/// index on ties) is positive, making outputs reproducible.
EigenDecomposition sym_eig(const Matrix& s);

/// Smallest R in [1, J] whose tail sum of clamped eigenvalues is within the
/// threshold: sum_{i>R} max(values[i], 0) <= threshold.
std::int64_t select_rank(std::span<const double> values, double threshold);

/// Leading `count` eigenvectors as a J x count matrix.
Matrix leading_vectors(const EigenDecomposition& eig, std::int64_t count);

}  // namespace tucker
