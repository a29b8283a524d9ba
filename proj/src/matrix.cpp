#include "tucker/matrix.hpp"

#include <cmath>
#include <string>

namespace tucker {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " do not match");
  }
  Matrix out(a.rows(), b.cols());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    for (std::int64_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::int64_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("max_abs_diff dimension mismatch");
  }
  double d = 0.0;
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

}  // namespace tucker
