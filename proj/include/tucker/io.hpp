#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tucker/dense_tensor.hpp"
#include "tucker/tucker_model.hpp"

namespace tucker {

/// Optional provenance carried in a raw tensor's sidecar.
struct RawTensorMeta {
  std::optional<std::string> generator;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::int64_t>> ranks;
  std::optional<double> noise;
};

/// Writes the payload as little-endian doubles in natural descending order
/// plus a text sidecar at `<path>.meta` holding the dims and element type.
void write_raw_tensor(const std::filesystem::path& path, const DenseTensor& tensor,
                      const RawTensorMeta* meta = nullptr);

/// Validates the sidecar and the payload length before reading any data.
DenseTensor read_raw_tensor(const std::filesystem::path& path, RawTensorMeta* meta_out = nullptr);

/// Writes a model archive directory: metadata text (dims, tolerance, order,
/// preprocessing, spectra), the core as a raw tensor file, one column-major
/// binary per factor, and optional shift/scale vectors.
void save_model(const std::filesystem::path& dir, const TuckerModel& model);

/// Reload must reproduce the saved model bit for bit.
TuckerModel load_model(const std::filesystem::path& dir);

}  // namespace tucker
