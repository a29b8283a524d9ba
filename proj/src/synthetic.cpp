#include "tucker/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tucker/local_kernels.hpp"
#include "tucker/matrix.hpp"

namespace tucker {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
  return splitmix64(s);
}

}  // namespace

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : state_(mix_stream(seed, stream)) {}

std::uint64_t NormalStream::next_word() { return splitmix64(state_); }

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Uniforms in (0,1), never hitting the endpoints.
  const double u1 = (static_cast<double>(next_word() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(next_word() >> 11) + 0.5) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  const int order = spec.dims.order();
  if (static_cast<int>(spec.ranks.size()) != order) {
    throw DimensionError("synthetic ranks must name every mode");
  }
  for (int n = 0; n < order; ++n) {
    const std::int64_t r = spec.ranks[static_cast<std::size_t>(n)];
    if (r < 1 || r > spec.dims.extent(n)) {
      throw DimensionError("synthetic rank " + std::to_string(r) + " out of range in mode " +
                           std::to_string(n));
    }
  }
  if (spec.noise < 0.0) throw DimensionError("noise level must be nonnegative");

  // Stream 0 fills the core, stream 1+n factor n, stream 100 the noise.
  NormalStream core_stream(spec.seed, 0);
  DenseTensor expanded{Shape(std::vector<std::int64_t>(spec.ranks.begin(), spec.ranks.end()))};
  for (std::int64_t i = 0; i < expanded.size(); ++i) expanded[i] = core_stream.next();

  for (int n = 0; n < order; ++n) {
    NormalStream factor_stream(spec.seed, static_cast<std::uint64_t>(1 + n));
    Matrix u(spec.dims.extent(n), spec.ranks[static_cast<std::size_t>(n)]);
    for (double& v : u.values()) v = factor_stream.next();
    expanded = ttm(expanded, n, u);
  }

  SyntheticResult result;
  result.ranks = spec.ranks;
  result.seed = spec.seed;
  result.exact_norm = expanded.norm();

  if (spec.noise > 0.0) {
    const double scale =
        spec.noise * result.exact_norm / std::sqrt(static_cast<double>(spec.dims.product()));
    NormalStream noise_stream(spec.seed, 100);
    double noise_sq = 0.0;
    for (std::int64_t i = 0; i < expanded.size(); ++i) {
      const double bump = scale * noise_stream.next();
      noise_sq += bump * bump;
      expanded[i] += bump;
    }
    result.noise_norm = std::sqrt(noise_sq);
  }

  result.tensor_norm = expanded.norm();
  result.tensor = std::move(expanded);
  return result;
}

}  // namespace tucker
