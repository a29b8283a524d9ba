#include "tucker/tucker_model.hpp"

#include <cmath>

namespace tucker {

StorageAccounting storage_accounting(const TuckerModel& model) {
  StorageAccounting acc;
  acc.elements = model.core.shape().product();
  for (int n = 0; n < model.order(); ++n) {
    const Matrix& u = model.factors[static_cast<std::size_t>(n)];
    acc.elements += u.rows() * u.cols();
  }
  if (model.scaling) {
    acc.elements += 2 * static_cast<std::int64_t>(model.scaling->shift.size());
  }
  acc.bytes = acc.elements * 8;
  acc.compression_ratio =
      static_cast<double>(model.source_dims.product()) / static_cast<double>(acc.elements);
  return acc;
}

void check_factor_orthonormality(const TuckerModel& model, double tolerance) {
  for (int n = 0; n < model.order(); ++n) {
    const Matrix& u = model.factors[static_cast<std::size_t>(n)];
    for (std::int64_t a = 0; a < u.cols(); ++a) {
      for (std::int64_t b = a; b < u.cols(); ++b) {
        double dot = 0.0;
        for (std::int64_t r = 0; r < u.rows(); ++r) dot += u(r, a) * u(r, b);
        const double expected = a == b ? 1.0 : 0.0;
        if (std::abs(dot - expected) > tolerance) {
          throw NumericalError("factor " + std::to_string(n) +
                               " lost column orthonormality: deviation " +
                               std::to_string(std::abs(dot - expected)));
        }
      }
    }
  }
}

}  // namespace tucker
