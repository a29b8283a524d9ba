#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "tucker/dense_tensor.hpp"

using namespace tucker;
using namespace tucker::testing;

TEST_CASE("shape products and edge conventions") {
  const Shape s({3, 4, 3, 2});
  CHECK(s.product() == 72);
  CHECK(s.product_below(0) == 1);
  CHECK(s.product_above(3) == 1);
  for (int n = 0; n < s.order(); ++n) {
    CHECK(s.product() == s.product_except(n) * s.extent(n));
    CHECK(s.product_except(n) == s.product_below(n) * s.product_above(n));
  }
  CHECK_THROWS_AS(Shape(std::vector<std::int64_t>{}), DimensionError);
  CHECK_THROWS_AS(Shape({3, 0, 2}), DimensionError);
  CHECK_NOTHROW(Shape({1}));
}

TEST_CASE("linear index of a multi-index") {
  const Shape s({3, 4, 3, 2});
  CHECK(index_to_linear(std::vector<std::int64_t>{0, 0, 0, 0}, s) == 0);
  CHECK(index_to_linear(std::vector<std::int64_t>{1, 2, 0, 1}, s) == 43);
  CHECK(index_to_linear(std::vector<std::int64_t>{2, 3, 2, 1}, s) == 71);
  CHECK_THROWS_AS(index_to_linear(std::vector<std::int64_t>{3, 0, 0, 0}, s), BoundsError);
  CHECK_THROWS_WITH_AS(index_to_linear(std::vector<std::int64_t>{0, 4, 0, 0}, s),
                       doctest::Contains("mode 1"), BoundsError);
}

TEST_CASE("inverse of the linear index") {
  const Shape s({3, 4, 3, 2});
  CHECK(linear_to_index(0, s) == std::vector<std::int64_t>{0, 0, 0, 0});
  CHECK(linear_to_index(43, s) == std::vector<std::int64_t>{1, 2, 0, 1});
  CHECK_THROWS_AS(linear_to_index(72, s), BoundsError);

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> pick(0, s.product() - 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t lin = pick(rng);
    CHECK(index_to_linear(linear_to_index(lin, s), s) == lin);
  }
}

TEST_CASE("round trip is a bijection on every index") {
  for (const auto& dims : {std::vector<std::int64_t>{7}, {2, 3, 2, 2, 2},
                           std::vector<std::int64_t>{5, 1, 9}, {3, 4, 3, 2}}) {
    const Shape s(dims);
    REQUIRE(s.product() <= 10000);
    for (std::int64_t lin = 0; lin < s.product(); ++lin) {
      CHECK(index_to_linear(linear_to_index(lin, s), s) == lin);
    }
  }
}

TEST_CASE("unfolding matches the worked 3x4x3x2 example") {
  const DenseTensor t = linear_index_tensor({3, 4, 3, 2});

  const UnfoldingView mode1(t, 1);
  const std::vector<double> row0 = {0,  1,  2,  12, 13, 14, 24, 25, 26,
                                    36, 37, 38, 48, 49, 50, 60, 61, 62};
  REQUIRE(mode1.cols() == static_cast<std::int64_t>(row0.size()));
  for (std::int64_t c = 0; c < mode1.cols(); ++c) CHECK(mode1.entry(0, c) == row0[c]);

  const UnfoldingView mode0(t, 0);
  CHECK(mode0.entry(0, 0) == 0);
  CHECK(mode0.entry(1, 0) == 1);
  CHECK(mode0.entry(2, 0) == 2);

  const UnfoldingView mode3(t, 3);
  for (std::int64_t c = 0; c < 12; ++c) CHECK(mode3.entry(1, c) == 36 + static_cast<double>(c));
}

TEST_CASE("unfolding views agree with the index-map oracle on all modes") {
  const DenseTensor t = linear_index_tensor({3, 4, 3, 2});
  for (int mode = 0; mode < 4; ++mode) {
    const UnfoldingView view(t, mode);
    const Matrix expected = oracle_unfolding(t, mode);
    REQUIRE(view.rows() == expected.rows());
    REQUIRE(view.cols() == expected.cols());
    for (std::int64_t r = 0; r < view.rows(); ++r) {
      for (std::int64_t c = 0; c < view.cols(); ++c) {
        CHECK(view.entry(r, c) == expected(r, c));
      }
    }
  }
}

TEST_CASE("unfolding block structure") {
  const DenseTensor t = linear_index_tensor({3, 4, 3, 2});
  const UnfoldingView v1(t, 1);
  CHECK(v1.block_count() == 6);
  CHECK(v1.rows() == 4);
  CHECK(v1.block_cols() == 3);
  // Block k starts at flat offset k * rows * block_cols.
  CHECK(v1.block(2) - v1.block(0) == 2 * 4 * 3);
  CHECK_THROWS_AS(UnfoldingView(t, 4).entry(0, 0), BoundsError);
  CHECK_THROWS_AS(v1.entry(4, 0), BoundsError);
}

TEST_CASE("norm is the square root of the sum of squares") {
  DenseTensor ones(Shape({3, 4, 3, 2}), std::vector<double>(72, 1.0));
  CHECK(ones.norm() == doctest::Approx(std::sqrt(72.0)).epsilon(1e-14));

  DenseTensor zero{Shape({4, 5})};
  CHECK(zero.norm() == 0.0);

  std::mt19937_64 rng(11);
  const DenseTensor t = random_tensor({2, 2, 2}, rng);
  double direct = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) direct += t[i] * t[i];
  CHECK(t.norm() == doctest::Approx(std::sqrt(direct)).epsilon(1e-14));
}

TEST_CASE("norm is invariant across unfoldings") {
  std::mt19937_64 rng(13);
  const DenseTensor t = random_tensor({3, 4, 3, 2}, rng);
  const double norm = t.norm();
  for (int mode = 0; mode < 4; ++mode) {
    const Matrix m = oracle_unfolding(t, mode);
    CHECK(frobenius_norm(m) == doctest::Approx(norm).epsilon(1e-14));
    CHECK(UnfoldingView(t, mode).frobenius_norm() == doctest::Approx(norm).epsilon(1e-14));
  }
}

TEST_CASE("extent one modes and high orders are legal") {
  std::mt19937_64 rng(17);
  const DenseTensor t = random_tensor({2, 1, 3, 1, 2, 2}, rng);
  for (int mode = 0; mode < 6; ++mode) {
    const UnfoldingView view(t, mode);
    const Matrix expected = oracle_unfolding(t, mode);
    for (std::int64_t r = 0; r < view.rows(); ++r) {
      for (std::int64_t c = 0; c < view.cols(); ++c) {
        CHECK(view.entry(r, c) == expected(r, c));
      }
    }
  }
  const DenseTensor one_way = random_tensor({6}, rng);
  CHECK(UnfoldingView(one_way, 0).cols() == 1);
}

TEST_CASE("tensor construction validates value counts") {
  CHECK_THROWS_AS(DenseTensor(Shape({2, 2}), std::vector<double>(3, 0.0)), DimensionError);
}
