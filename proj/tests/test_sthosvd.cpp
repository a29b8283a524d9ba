#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "tucker/sthosvd.hpp"
#include "tucker/synthetic.hpp"

using namespace tucker;
using namespace tucker::testing;

TEST_CASE("slice statistics of a constant tensor") {
  DenseTensor t(Shape({3, 4}), std::vector<double>(12, 7.0));
  for (int mode = 0; mode < 2; ++mode) {
    for (const SliceStats& s : slice_statistics(t, mode)) {
      CHECK(s.mean == 7.0);
      CHECK(s.stddev == 0.0);
      CHECK(s.min == 7.0);
      CHECK(s.max == 7.0);
    }
  }
}

TEST_CASE("slice statistics of a two by two example") {
  // Element (i,j) = 1 + i*2 + j: slice 0 of mode 0 is {1, 2}.
  DenseTensor t(Shape({2, 2}), std::vector<double>{1.0, 3.0, 2.0, 4.0});
  const std::vector<SliceStats> stats = slice_statistics(t, 0);
  CHECK(stats[0].mean == doctest::Approx(1.5));
  CHECK(stats[1].mean == doctest::Approx(3.5));
  CHECK(stats[0].min == 1.0);
  CHECK(stats[0].max == 2.0);
  CHECK(stats[0].one_norm == doctest::Approx(3.0));
}

TEST_CASE("slice two-norms satisfy the Pythagorean identity") {
  std::mt19937_64 rng(5);
  const DenseTensor t = random_tensor({4, 5, 3}, rng);
  for (int mode = 0; mode < 3; ++mode) {
    double sum = 0.0;
    for (const SliceStats& s : slice_statistics(t, mode)) sum += s.two_norm * s.two_norm;
    CHECK(sum == doctest::Approx(t.sum_squares()).epsilon(1e-13));
  }
}

TEST_CASE("standardization centers and unit-scales each slice") {
  std::mt19937_64 rng(7);
  DenseTensor t = random_tensor({5, 6, 4}, rng);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = t[i] * 3.0 + 11.0;

  const SliceScaling scaling = compute_scaling(t, ScalingMethod::standardize, 1);
  apply_scaling(t, scaling);

  for (const SliceStats& s : slice_statistics(t, 1)) {
    CHECK(s.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.stddev == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Standardizing again leaves the tensor essentially unchanged.
  DenseTensor again = t;
  const SliceScaling second = compute_scaling(again, ScalingMethod::standardize, 1);
  apply_scaling(again, second);
  CHECK(relative_tensor_diff(t, again) <= 1e-13);
}

TEST_CASE("max rescaling bounds each slice by one") {
  std::mt19937_64 rng(11);
  DenseTensor t = random_tensor({4, 3, 5}, rng);
  const SliceScaling scaling = compute_scaling(t, ScalingMethod::max_scale, 2);
  apply_scaling(t, scaling);
  for (const SliceStats& s : slice_statistics(t, 2)) {
    const double peak = std::max(std::abs(s.min), std::abs(s.max));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("preprocessing round-trips and tolerates degenerate slices") {
  std::mt19937_64 rng(13);
  DenseTensor t = random_tensor({4, 5, 3}, rng);
  // Make slice 2 of mode 1 constant and slice 3 all zero.
  const Shape& shape = t.shape();
  for (std::int64_t lin = 0; lin < t.size(); ++lin) {
    const std::vector<std::int64_t> idx = linear_to_index(lin, shape);
    if (idx[1] == 2) t[lin] = 4.25;
    if (idx[1] == 3) t[lin] = 0.0;
  }
  const DenseTensor original = t;

  for (ScalingMethod method : {ScalingMethod::standardize, ScalingMethod::max_scale}) {
    DenseTensor work = original;
    const SliceScaling scaling = compute_scaling(work, method, 1);
    apply_scaling(work, scaling);
    invert_scaling(work, scaling);
    CHECK(relative_tensor_diff(original, work) <= 1e-13);
  }
}

TEST_CASE("zero tolerance keeps every mode at full rank") {
  std::mt19937_64 rng(17);
  const DenseTensor t = random_tensor({5, 4, 6}, rng);
  const TuckerModel model = sthosvd(t, {.tolerance = 0.0});
  for (int n = 0; n < 3; ++n) CHECK(model.core.shape().extent(n) == t.shape().extent(n));
  CHECK(reconstruction_error(t, model) <= 1e-10);
}

TEST_CASE("synthetic tensors with exact rank are recovered") {
  // The tail-sum rule clamps negative round-off eigenvalues, so recovery is
  // exercised at a tolerance comfortably above the Gram round-off floor.
  const SyntheticResult data =
      generate_synthetic({.dims = Shape({10, 12, 10}), .ranks = {2, 3, 2}, .noise = 0.0, .seed = 9});
  const TuckerModel model = sthosvd(data.tensor, {.tolerance = 1e-6});
  CHECK(model.core.shape().dims() == std::vector<std::int64_t>{2, 3, 2});
  CHECK(reconstruction_error(data.tensor, model) <= 1e-6);
}

TEST_CASE("noisy synthetic data compresses to the noise level") {
  const SyntheticResult data = generate_synthetic(
      {.dims = Shape({12, 10, 8}), .ranks = {3, 2, 2}, .noise = 1e-3, .seed = 21});
  const TuckerModel model = sthosvd(data.tensor, {.tolerance = 1e-2});
  const double error = reconstruction_error(data.tensor, model);
  CHECK(error <= 1e-2 + 1e-8);
  // Truncation back to the true ranks keeps roughly the noise level.
  CHECK(error <= 2e-3);
}

TEST_CASE("error stays within tolerance over random cases") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> pick_tol(0.0, 0.6);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseTensor t = random_tensor({6, 5, 4}, rng);
    const double tol = pick_tol(rng);
    const TuckerModel model = sthosvd(t, {.tolerance = tol});
    CHECK(reconstruction_error(t, model) <= tol + 1e-8);
    CHECK(preprocessed_error(t, model) ==
          doctest::Approx(reconstruction_error(t, model)).epsilon(1e-12));
  }
}

TEST_CASE("mode order is configurable and preserves the guarantee") {
  std::mt19937_64 rng(29);
  const DenseTensor t = random_tensor({6, 5, 4, 3}, rng);
  const TuckerModel model = sthosvd(t, {.tolerance = 0.3, .mode_order = {2, 0, 3, 1}});
  CHECK(model.mode_order == std::vector<int>{2, 0, 3, 1});
  CHECK(reconstruction_error(t, model) <= 0.3 + 1e-8);
  CHECK_THROWS_AS(sthosvd(t, {.tolerance = 0.1, .mode_order = {0, 0, 1, 2}}), DimensionError);
}

TEST_CASE("fixed ranks bypass the threshold rule") {
  std::mt19937_64 rng(31);
  const DenseTensor t = random_tensor({6, 5, 4}, rng);
  CompressOptions options;
  options.fixed_ranks = std::vector<std::int64_t>{2, 3, 2};
  const TuckerModel model = sthosvd(t, options);
  CHECK(model.core.shape().dims() == std::vector<std::int64_t>{2, 3, 2});
  CHECK(model.achieved_relative_error > 0.0);
  options.fixed_ranks = std::vector<std::int64_t>{7, 1, 1};
  CHECK_THROWS_AS(sthosvd(t, options), DimensionError);
}

TEST_CASE("mass identity links the core norm to the error") {
  std::mt19937_64 rng(37);
  const DenseTensor t = random_tensor({6, 5, 4}, rng);
  const TuckerModel model = sthosvd(t, {.tolerance = 0.4});
  check_factor_orthonormality(model);
  const double err = reconstruction_error(t, model);
  const double norm_sq = t.sum_squares();
  const double core_sq = model.core.sum_squares();
  CHECK(norm_sq - core_sq ==
        doctest::Approx(err * err * norm_sq).epsilon(1e-9));
}

TEST_CASE("per-mode residual terms sum to the squared error") {
  std::mt19937_64 rng(41);
  const DenseTensor t = random_tensor({6, 5, 4}, rng);
  for (double tol : {0.0, 0.3}) {
    const TuckerModel model = sthosvd(t, {.tolerance = tol});
    const std::vector<double> terms = error_decomposition(t, model);
    double sum = 0.0;
    for (double term : terms) {
      sum += term;
      // Each term honors its share of the budget.
      CHECK(term <= tol * tol * t.sum_squares() / 3.0 + 1e-8);
    }
    const double err = reconstruction_error(t, model);
    if (tol == 0.0) {
      for (double term : terms) CHECK(term <= 1e-18 * t.sum_squares());
    } else {
      CHECK(sum == doctest::Approx(err * err * t.sum_squares()).epsilon(1e-9));
    }
  }
}

TEST_CASE("partial core norms shrink along the mode order") {
  std::mt19937_64 rng(43);
  const DenseTensor t = random_tensor({6, 5, 4}, rng);
  const TuckerModel model = sthosvd(t, {.tolerance = 0.4});
  DenseTensor partial = t;
  double previous = partial.norm();
  for (int n : model.mode_order) {
    partial = ttm(partial, n, model.factors[static_cast<std::size_t>(n)].transposed());
    CHECK(partial.norm() <= previous * (1.0 + 1e-12));
    previous = partial.norm();
  }
}

TEST_CASE("baseline factorization uses original unfoldings") {
  const SyntheticResult data =
      generate_synthetic({.dims = Shape({10, 12, 10}), .ranks = {2, 3, 2}, .noise = 0.0, .seed = 3});
  const TuckerModel a = hosvd(data.tensor, {.tolerance = 1e-6});
  const TuckerModel b = sthosvd(data.tensor, {.tolerance = 1e-6});
  CHECK(a.core.shape() == b.core.shape());

  std::mt19937_64 rng(47);
  const DenseTensor t = random_tensor({6, 5, 4}, rng);
  const TuckerModel h = hosvd(t, {.tolerance = 0.3});
  CHECK(reconstruction_error(t, h) <= 0.3 + 1e-8);
}

TEST_CASE("neither method is uniformly more accurate") {
  std::mt19937_64 rng(53);
  const DenseTensor t = random_tensor({6, 5, 4}, rng);
  CompressOptions options;
  options.fixed_ranks = std::vector<std::int64_t>{3, 3, 2};
  const double e_st = reconstruction_error(t, sthosvd(t, options));
  const double e_h = reconstruction_error(t, hosvd(t, options));
  // Only the quasi-optimality envelope is guaranteed.
  CHECK(e_st <= std::sqrt(3.0) * e_h * (1.0 + 1e-8));
}

TEST_CASE("expansion with random orthonormal factors preserves the core norm") {
  std::mt19937_64 rng(59);
  TuckerModel model;
  model.source_dims = Shape({7, 6, 5});
  model.core = random_tensor({3, 2, 4}, rng);
  model.factors = {random_orthonormal(7, 3, rng), random_orthonormal(6, 2, rng),
                   random_orthonormal(5, 4, rng)};
  const DenseTensor expanded = expand_core(model);
  CHECK(expanded.norm() == doctest::Approx(model.core.norm()).epsilon(1e-12));
}

TEST_CASE("distributed run on one rank matches the sequential result") {
  std::mt19937_64 rng(61);
  const DenseTensor t = random_tensor({6, 5, 4}, rng);
  const BlockMap map = BlockMap::checked(t.shape(), ProcessorGrid(Shape({1, 1, 1})));
  VirtualComm comm(1);
  const TuckerModel par = sthosvd_distributed(scatter(t, map), {.tolerance = 0.3}, comm);
  const TuckerModel seq = sthosvd(t, {.tolerance = 0.3});
  CHECK(par.core.shape() == seq.core.shape());
  CHECK(relative_tensor_diff(seq.core, par.core) <= 1e-14);
  for (int n = 0; n < 3; ++n) {
    CHECK(max_abs_diff(par.factors[static_cast<std::size_t>(n)],
                       seq.factors[static_cast<std::size_t>(n)]) <= 1e-14);
  }
}

TEST_CASE("distributed ranks match the sequential run on the fixture") {
  const DenseTensor t = linear_index_tensor({3, 4, 3, 2});
  const BlockMap map = BlockMap::checked(t.shape(), ProcessorGrid(Shape({2, 2, 2, 1})));
  VirtualComm comm(8);
  const TuckerModel par = sthosvd_distributed(scatter(t, map), {.tolerance = 0.3}, comm);
  const TuckerModel seq = sthosvd(t, {.tolerance = 0.3});
  CHECK(par.core.shape() == seq.core.shape());
}

TEST_CASE("distributed factors and core agree with sequential") {
  std::mt19937_64 rng(67);
  const DenseTensor t = random_tensor({8, 9, 10}, rng);
  const BlockMap map = BlockMap::checked(t.shape(), ProcessorGrid(Shape({2, 3, 2})));
  VirtualComm comm(12);
  const TuckerModel par = sthosvd_distributed(scatter(t, map), {.tolerance = 0.1}, comm);
  const TuckerModel seq = sthosvd(t, {.tolerance = 0.1});
  REQUIRE(par.core.shape() == seq.core.shape());
  for (int n = 0; n < 3; ++n) {
    CHECK(max_abs_diff(par.factors[static_cast<std::size_t>(n)],
                       seq.factors[static_cast<std::size_t>(n)]) <= 1e-10);
  }
  CHECK(relative_tensor_diff(seq.core, par.core) <= 1e-10);
  CHECK(reconstruction_error(t, par) <= 0.1 + 1e-8);
}

TEST_CASE("degenerate shapes compress and reconstruct") {
  std::mt19937_64 rng(73);

  // Extent-one mode.
  const DenseTensor narrow = random_tensor({4, 1, 3}, rng);
  const TuckerModel nm = sthosvd(narrow, {.tolerance = 0.0});
  CHECK(reconstruction_error(narrow, nm) <= 1e-10);

  // One-way tensor.
  const DenseTensor vec = random_tensor({9}, rng);
  const TuckerModel vm = sthosvd(vec, {.tolerance = 1e-8});
  CHECK(vm.core.shape().extent(0) == 1);
  CHECK(reconstruction_error(vec, vm) <= 1e-8);

  // All zeros.
  const DenseTensor zero{Shape({3, 4, 2})};
  const TuckerModel zm = sthosvd(zero, {.tolerance = 0.5});
  CHECK(zm.core.shape().dims() == std::vector<std::int64_t>{1, 1, 1});
  CHECK(reconstruction_error(zero, zm) == 0.0);
}

TEST_CASE("synthetic generator is seed-deterministic") {
  const SyntheticSpec spec{.dims = Shape({6, 5, 4}), .ranks = {2, 2, 2}, .noise = 1e-2, .seed = 77};
  const SyntheticResult a = generate_synthetic(spec);
  const SyntheticResult b = generate_synthetic(spec);
  CHECK(bitwise_equal(a.tensor, b.tensor));
  const SyntheticResult c = generate_synthetic(
      {.dims = Shape({6, 5, 4}), .ranks = {2, 2, 2}, .noise = 1e-2, .seed = 78});
  CHECK(!bitwise_equal(a.tensor, c.tensor));
}

TEST_CASE("noise-free synthetic tensors have numerically exact rank") {
  const SyntheticResult data = generate_synthetic(
      {.dims = Shape({20, 20, 20}), .ranks = {3, 3, 3}, .noise = 0.0, .seed = 5});
  for (int mode = 0; mode < 3; ++mode) {
    const EigenDecomposition eig = sym_eig(gram(data.tensor, mode));
    CHECK(eig.values[3] / eig.values[0] <= 1e-12);
  }
}

TEST_CASE("measured noise tracks the requested level") {
  const SyntheticResult data = generate_synthetic(
      {.dims = Shape({20, 20, 20}), .ranks = {3, 3, 3}, .noise = 1e-2, .seed = 15});
  const double measured = data.noise_norm / data.tensor_norm;
  CHECK(measured >= 0.5e-2);
  CHECK(measured <= 2e-2);
}

TEST_CASE("storage accounting for the reference scenario") {
  TuckerModel model;
  model.source_dims = Shape({500, 500, 500, 11, 400});
  model.core = DenseTensor(Shape({30, 38, 35, 6, 11}));
  model.factors = {Matrix(500, 30), Matrix(500, 38), Matrix(500, 35), Matrix(11, 6),
                   Matrix(400, 11)};
  const StorageAccounting acc = storage_accounting(model);
  CHECK(acc.elements == 2689366);
  CHECK(acc.bytes == 21514928);
  CHECK(static_cast<double>(acc.bytes) / 1e6 == doctest::Approx(21.5).epsilon(0.02));
  CHECK(acc.compression_ratio == doctest::Approx(2.045e5).epsilon(0.01));
}

TEST_CASE("a full-rank model is larger than its source") {
  std::mt19937_64 rng(71);
  const DenseTensor t = random_tensor({5, 4, 3}, rng);
  const TuckerModel model = sthosvd(t, {.tolerance = 0.0});
  CHECK(storage_accounting(model).compression_ratio < 1.0);
}
