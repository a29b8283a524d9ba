#include "tucker/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace tucker {

namespace {

constexpr const char* kRawFormat = "raw-tensor-v1";
constexpr const char* kModelFormat = "tucker-model-v1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_doubles_le(std::ofstream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      bits = __builtin_bswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
}

void read_doubles_le(std::ifstream& in, std::span<double> values) {
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      bits = __builtin_bswap64(bits);
      std::memcpy(&v, &bits, sizeof(bits));
    }
  }
}

void write_binary_file(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_doubles_le(out, values);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> read_binary_file(const std::filesystem::path& path,
                                     std::int64_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const std::int64_t bytes = static_cast<std::int64_t>(in.tellg());
  if (bytes != expected_count * 8) {
    throw IoError(path.string() + " holds " + std::to_string(bytes) + " bytes, expected " +
                  std::to_string(expected_count * 8));
  }
  in.seekg(0, std::ios::beg);
  std::vector<double> values(static_cast<std::size_t>(expected_count));
  read_doubles_le(in, values);
  if (!in) throw IoError("failed reading " + path.string());
  return values;
}

// Simple ordered "key: value" text file; repeated keys keep the last value.
class KeyValueFile {
 public:
  void set(const std::string& key, const std::string& value) {
    lines_.emplace_back(key, value);
    index_[key] = value;
  }

  bool has(const std::string& key) const { return index_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw IoError("missing metadata field '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = index_.find(key);
    return it == index_.end() ? fallback : it->second;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& [key, value] : lines_) out << key << ": " << value << "\n";
    if (!out) throw IoError("failed writing " + path.string());
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    KeyValueFile kv;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const std::size_t colon = line.find(':');
      if (colon == std::string::npos) throw IoError("malformed line in " + path.string());
      std::string key = line.substr(0, colon);
      std::string value = line.substr(colon + 1);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      kv.set(key, value);
    }
    return kv;
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
  std::map<std::string, std::string> index_;
};

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::int64_t> values;
  std::int64_t v;
  while (in >> v) values.push_back(v);
  return values;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  return values;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << " ";
    if constexpr (std::is_same_v<T, double>) {
      out << format_double(values[i]);
    } else {
      out << values[i];
    }
  }
  return out.str();
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".meta");
}

}  // namespace

void write_raw_tensor(const std::filesystem::path& path, const DenseTensor& tensor,
                      const RawTensorMeta* meta) {
  KeyValueFile kv;
  kv.set("format", kRawFormat);
  kv.set("dims", join(tensor.shape().dims()));
  kv.set("type", "f64le");
  if (meta) {
    if (meta->generator) kv.set("generator", *meta->generator);
    if (meta->seed) kv.set("seed", std::to_string(*meta->seed));
    if (meta->ranks) kv.set("ranks", join(*meta->ranks));
    if (meta->noise) kv.set("noise", format_double(*meta->noise));
  }
  kv.save(sidecar_path(path));
  write_binary_file(path, tensor.values());
}

DenseTensor read_raw_tensor(const std::filesystem::path& path, RawTensorMeta* meta_out) {
  const KeyValueFile kv = KeyValueFile::load(sidecar_path(path));
  if (kv.get("format") != kRawFormat) {
    throw IoError(path.string() + ": unsupported format '" + kv.get("format") + "'");
  }
  if (kv.get("type") != "f64le") {
    throw IoError(path.string() + ": unsupported element type '" + kv.get("type") + "'");
  }
  const std::vector<std::int64_t> dims = parse_int_list(kv.get("dims"));
  Shape shape(dims);
  std::vector<double> values = read_binary_file(path, shape.product());
  if (meta_out) {
    *meta_out = RawTensorMeta{};
    if (kv.has("generator")) meta_out->generator = kv.get("generator");
    if (kv.has("seed")) meta_out->seed = std::stoull(kv.get("seed"));
    if (kv.has("ranks")) meta_out->ranks = parse_int_list(kv.get("ranks"));
    if (kv.has("noise")) meta_out->noise = std::stod(kv.get("noise"));
  }
  return DenseTensor(std::move(shape), std::move(values));
}

void save_model(const std::filesystem::path& dir, const TuckerModel& model) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  KeyValueFile kv;
  kv.set("format", kModelFormat);
  kv.set("source_dims", join(model.source_dims.dims()));
  kv.set("core_dims", join(model.core.shape().dims()));
  kv.set("tolerance", format_double(model.tolerance));
  kv.set("mode_order", join(std::vector<std::int64_t>(model.mode_order.begin(),
                                                      model.mode_order.end())));
  kv.set("preprocess", scaling_method_name(model.method));
  if (model.scaling) kv.set("slice_mode", std::to_string(model.scaling->mode));
  kv.set("norm", format_double(model.norm_x));
  kv.set("achieved_relative_error", format_double(model.achieved_relative_error));
  if (!model.generator.empty()) {
    kv.set("generator", model.generator);
    kv.set("seed", std::to_string(model.seed));
  }
  for (std::size_t n = 0; n < model.spectra.size(); ++n) {
    kv.set("spectrum_" + std::to_string(n), join(model.spectra[n]));
  }
  kv.save(dir / "metadata.txt");

  write_raw_tensor(dir / "core.raw", model.core);
  for (int n = 0; n < model.order(); ++n) {
    // Column-major so each basis vector is a contiguous run.
    const Matrix& u = model.factors[static_cast<std::size_t>(n)];
    std::vector<double> col_major(static_cast<std::size_t>(u.rows() * u.cols()));
    for (std::int64_t c = 0; c < u.cols(); ++c) {
      for (std::int64_t r = 0; r < u.rows(); ++r) {
        col_major[static_cast<std::size_t>(c * u.rows() + r)] = u(r, c);
      }
    }
    write_binary_file(dir / ("factor_" + std::to_string(n) + ".bin"), col_major);
  }
  if (model.scaling) {
    write_binary_file(dir / "shift.bin", model.scaling->shift);
    write_binary_file(dir / "scale.bin", model.scaling->scale);
  }
}

TuckerModel load_model(const std::filesystem::path& dir) {
  const KeyValueFile kv = KeyValueFile::load(dir / "metadata.txt");
  if (kv.get("format") != kModelFormat) {
    throw IoError(dir.string() + ": unsupported model format '" + kv.get("format") + "'");
  }

  TuckerModel model;
  model.source_dims = Shape(parse_int_list(kv.get("source_dims")));
  const Shape core_dims(parse_int_list(kv.get("core_dims")));
  if (core_dims.order() != model.source_dims.order()) {
    throw IoError(dir.string() + ": core and source orders disagree");
  }
  model.tolerance = std::stod(kv.get("tolerance"));
  for (std::int64_t m : parse_int_list(kv.get("mode_order"))) {
    model.mode_order.push_back(static_cast<int>(m));
  }
  model.method = scaling_method_from_name(kv.get_or("preprocess", "none"));
  model.norm_x = std::stod(kv.get("norm"));
  model.achieved_relative_error = std::stod(kv.get("achieved_relative_error"));
  if (kv.has("generator")) {
    model.generator = kv.get("generator");
    model.seed = std::stoull(kv.get_or("seed", "0"));
  }

  model.core = read_raw_tensor(dir / "core.raw");
  if (model.core.shape() != core_dims) {
    throw IoError(dir.string() + ": core payload does not match metadata dims");
  }

  for (int n = 0; n < model.order(); ++n) {
    const std::int64_t rows = model.source_dims.extent(n);
    const std::int64_t cols = core_dims.extent(n);
    const std::vector<double> col_major =
        read_binary_file(dir / ("factor_" + std::to_string(n) + ".bin"), rows * cols);
    Matrix u(rows, cols);
    for (std::int64_t c = 0; c < cols; ++c) {
      for (std::int64_t r = 0; r < rows; ++r) {
        u(r, c) = col_major[static_cast<std::size_t>(c * rows + r)];
      }
    }
    model.factors.push_back(std::move(u));
  }

  if (model.method != ScalingMethod::none) {
    SliceScaling scaling;
    scaling.mode = static_cast<int>(std::stol(kv.get("slice_mode")));
    const std::int64_t extent = model.source_dims.extent(scaling.mode);
    scaling.shift = read_binary_file(dir / "shift.bin", extent);
    scaling.scale = read_binary_file(dir / "scale.bin", extent);
    model.scaling = std::move(scaling);
  }

  model.spectra.resize(static_cast<std::size_t>(model.order()));
  for (int n = 0; n < model.order(); ++n) {
    const std::string key = "spectrum_" + std::to_string(n);
    if (kv.has(key)) model.spectra[static_cast<std::size_t>(n)] = parse_double_list(kv.get(key));
  }
  return model;
}

}  // namespace tucker
