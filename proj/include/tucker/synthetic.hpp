#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tucker/dense_tensor.hpp"

namespace tucker {

/// Name of the random tensor generator, recorded in model metadata so a
/// reimplementation can reproduce the same tensors from the same seed.
inline constexpr const char* kGeneratorName = "splitmix64-boxmuller-v1";

/// Deterministic stream of standard normal variates.
///
/// Stream s of seed q draws 64-bit words from splitmix64 with initial state
/// mix(q, s); each uniform is ((word >> 11) + 0.5) * 2^-53 and normals come
/// from the Box-Muller transform, consumed pairwise.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  double next();
  std::uint64_t next_word();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SyntheticSpec {
  Shape dims;
  std::vector<std::int64_t> ranks;
  double noise = 0.0;  ///< target relative noise level
  std::uint64_t seed = 0;
};

struct SyntheticResult {
  DenseTensor tensor;
  std::vector<std::int64_t> ranks;
  std::uint64_t seed = 0;
  double exact_norm = 0.0;  ///< norm of the noise-free multilinear part
  double noise_norm = 0.0;  ///< exact norm of the added perturbation
  double tensor_norm = 0.0;
};

/// Random core and factors are expanded into a tensor of exact multilinear
/// rank at most `ranks`; optional noise scaled by
/// noise * exact_norm / sqrt(element count) is added element by element in
/// one pass, so no second full-size array ever exists.
SyntheticResult generate_synthetic(const SyntheticSpec& spec);

}  // namespace tucker
