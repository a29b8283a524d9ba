#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "tucker/local_kernels.hpp"

using namespace tucker;
using namespace tucker::testing;

TEST_CASE("gram of an all-ones matrix") {
  DenseTensor ones(Shape({2, 3}), std::vector<double>(6, 1.0));
  const Matrix s = gram(ones, 0);
  for (std::int64_t i = 0; i < 2; ++i) {
    for (std::int64_t j = 0; j < 2; ++j) CHECK(s(i, j) == doctest::Approx(3.0));
  }
}

TEST_CASE("gram trace equals the squared norm") {
  std::mt19937_64 rng(23);
  const DenseTensor t = random_tensor({4, 3, 5}, rng);
  for (int mode = 0; mode < 3; ++mode) {
    const Matrix s = gram(t, mode);
    double trace = 0.0;
    for (std::int64_t i = 0; i < s.rows(); ++i) trace += s(i, i);
    CHECK(trace == doctest::Approx(t.sum_squares()).epsilon(1e-13));
  }
}

TEST_CASE("blockwise gram equals the materialized-unfolding oracle") {
  std::mt19937_64 rng(29);
  for (const auto& dims : {std::vector<std::int64_t>{3, 4, 3, 2}, {6, 5, 4},
                           std::vector<std::int64_t>{2, 1, 7, 3}, {9, 8}}) {
    const DenseTensor t = random_tensor(dims, rng);
    for (int mode = 0; mode < t.shape().order(); ++mode) {
      const Matrix s = gram(t, mode);
      const Matrix expected = oracle_gram(t, mode);
      const double scale = frobenius_norm(expected);
      CHECK(max_abs_diff(s, expected) <= 1e-13 * scale);
      // Exact symmetry by construction.
      for (std::int64_t i = 0; i < s.rows(); ++i) {
        for (std::int64_t j = 0; j < s.rows(); ++j) CHECK(s(i, j) == s(j, i));
      }
    }
  }
}

TEST_CASE("ttm with the identity is the identity") {
  std::mt19937_64 rng(31);
  const DenseTensor t = random_tensor({4, 3, 5}, rng);
  for (int mode = 0; mode < 3; ++mode) {
    const DenseTensor z = ttm(t, mode, Matrix::identity(t.shape().extent(mode)));
    CHECK(bitwise_equal(z, t));
  }
}

TEST_CASE("ttm matches the direct oracle and reshapes the mode") {
  std::mt19937_64 rng(37);
  const DenseTensor t = random_tensor({4, 5, 3, 2}, rng);
  for (int mode = 0; mode < 4; ++mode) {
    const Matrix v = random_matrix(2, t.shape().extent(mode), rng);
    const DenseTensor z = ttm(t, mode, v);
    CHECK(z.shape().extent(mode) == 2);
    const DenseTensor expected = oracle_ttm(t, mode, v);
    CHECK(relative_tensor_diff(expected, z) <= 1e-13);
  }
  CHECK_THROWS_WITH_AS(ttm(t, 1, Matrix(2, 3)), doctest::Contains("mode 1"), DimensionError);
}

TEST_CASE("ttm order is irrelevant across distinct modes") {
  std::mt19937_64 rng(41);
  const DenseTensor t = random_tensor({5, 4, 3}, rng);
  const Matrix u = random_matrix(2, 5, rng);
  const Matrix v = random_matrix(3, 4, rng);
  const DenseTensor a = ttm(ttm(t, 0, u), 1, v);
  const DenseTensor b = ttm(ttm(t, 1, v), 0, u);
  CHECK(relative_tensor_diff(a, b) <= 1e-13);
}

TEST_CASE("repeated products in one mode compose by matrix product") {
  std::mt19937_64 rng(43);
  const DenseTensor t = random_tensor({5, 4, 3}, rng);
  const Matrix u = random_matrix(4, 5, rng);
  const Matrix v = random_matrix(2, 4, rng);
  const DenseTensor a = ttm(ttm(t, 0, u), 0, v);
  const DenseTensor b = ttm(t, 0, matmul(v, u));
  CHECK(relative_tensor_diff(a, b) <= 1e-13);
}

TEST_CASE("ttm with orthonormal rows never grows the norm") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseTensor t = random_tensor({6, 5, 4}, rng);
    const Matrix q = random_orthonormal(6, 3, rng);  // columns orthonormal
    const DenseTensor z = ttm(t, 0, q.transposed());
    CHECK(z.norm() <= t.norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("eigendecomposition of a diagonal matrix") {
  Matrix s(3, 3);
  s(0, 0) = 5.0;
  s(1, 1) = 3.0;
  s(2, 2) = 1.0;
  const EigenDecomposition eig = sym_eig(s);
  CHECK(eig.values == std::vector<double>{5.0, 3.0, 1.0});
  for (std::int64_t k = 0; k < 3; ++k) {
    for (std::int64_t r = 0; r < 3; ++r) {
      CHECK(eig.vectors(r, k) == doctest::Approx(r == k ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("two by two closed form") {
  Matrix s(2, 2);
  s(0, 0) = 2.0;
  s(0, 1) = 1.0;
  s(1, 0) = 1.0;
  s(1, 1) = 2.0;
  const EigenDecomposition eig = sym_eig(s);
  CHECK(eig.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("random symmetric matrices reconstruct and stay orthogonal") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 8; ++trial) {
    const std::int64_t n = 8;
    Matrix s(n, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = i; j < n; ++j) {
        s(i, j) = normal(rng);
        s(j, i) = s(i, j);
      }
    }
    const EigenDecomposition eig = sym_eig(s);

    CHECK(std::is_sorted(eig.values.rbegin(), eig.values.rend()));

    // V Lambda V^T = S
    Matrix lambda(n, n);
    for (std::int64_t k = 0; k < n; ++k) lambda(k, k) = eig.values[static_cast<std::size_t>(k)];
    const Matrix rebuilt = matmul(matmul(eig.vectors, lambda), eig.vectors.transposed());
    CHECK(max_abs_diff(rebuilt, s) <= 1e-11 * frobenius_norm(s));

    // V^T V = I
    const Matrix gram_v = matmul(eig.vectors.transposed(), eig.vectors);
    CHECK(max_abs_diff(gram_v, Matrix::identity(n)) <= 1e-12);

    // Residual per pair.
    for (std::int64_t k = 0; k < n; ++k) {
      double residual = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        double sv = 0.0;
        for (std::int64_t j = 0; j < n; ++j) sv += s(i, j) * eig.vectors(j, k);
        const double d = sv - eig.values[static_cast<std::size_t>(k)] * eig.vectors(i, k);
        residual += d * d;
      }
      CHECK(std::sqrt(residual) <= 1e-10 * std::max(1.0, frobenius_norm(s)));
    }

    // Sign convention: the largest-magnitude component is positive.
    for (std::int64_t k = 0; k < n; ++k) {
      std::int64_t arg = 0;
      for (std::int64_t r = 1; r < n; ++r) {
        if (std::abs(eig.vectors(r, k)) > std::abs(eig.vectors(arg, k))) arg = r;
      }
      CHECK(eig.vectors(arg, k) > 0.0);
    }

    double trace = 0.0, sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) trace += s(i, i);
    for (double v : eig.values) sum += v;
    CHECK(sum == doctest::Approx(trace).epsilon(1e-11));
  }
}

TEST_CASE("the sweep cap surfaces nonconvergence with a residual") {
  // A rotation matrix is not symmetric; the sweeps cannot drive the
  // off-diagonal mass to zero.
  Matrix m(3, 3);
  m(0, 1) = 1.0;
  m(1, 2) = 1.0;
  m(2, 0) = 1.0;
  CHECK_THROWS_WITH_AS(sym_eig(m), doctest::Contains("residual"), NumericalError);
}

TEST_CASE("rank selection by tail sums") {
  const std::vector<double> values = {5.0, 3.0, 1.0, 0.0};
  CHECK(select_rank(values, 1.0) == 2);
  CHECK(select_rank(values, 0.5) == 3);

  const std::vector<double> positive = {5.0, 3.0, 1.0};
  CHECK(select_rank(positive, 0.0) == 3);

  const std::vector<double> padded = {4.0, 0.0, 0.0};
  CHECK(select_rank(padded, 0.0) == 1);

  // Negative round-off never contributes to the tail.
  const std::vector<double> noisy = {4.0, 1e-16, -1e-12};
  CHECK(select_rank(noisy, 1e-15) == 1);
}

TEST_CASE("rank selection is monotone in the threshold") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> values(10);
    for (double& v : values) v = uniform(rng);
    std::sort(values.rbegin(), values.rend());
    const double t1 = uniform(rng), t2 = uniform(rng);
    const double lo = std::min(t1, t2), hi = std::max(t1, t2);
    CHECK(select_rank(values, hi) <= select_rank(values, lo));
  }
}

TEST_CASE("gram matrices are positive semidefinite up to round-off") {
  std::mt19937_64 rng(61);
  const DenseTensor t = random_tensor({5, 6, 4}, rng);
  for (int mode = 0; mode < 3; ++mode) {
    const Matrix s = gram(t, mode);
    const EigenDecomposition eig = sym_eig(s);
    double trace = 0.0;
    for (std::int64_t i = 0; i < s.rows(); ++i) trace += s(i, i);
    CHECK(eig.values.back() >= -1e-12 * trace);
  }
}
