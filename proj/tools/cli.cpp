#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "tucker/cost_plan.hpp"
#include "tucker/io.hpp"
#include "tucker/reconstruct.hpp"
#include "tucker/sthosvd.hpp"
#include "tucker/synthetic.hpp"

namespace tucker::cli {

namespace {

std::vector<std::int64_t> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<std::int64_t> values;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      values.push_back(std::stoll(token));
    } catch (const std::exception&) {
      throw DimensionError("cannot parse " + what + " entry '" + token + "'");
    }
  }
  if (values.empty()) throw DimensionError(what + " list is empty");
  return values;
}

std::vector<int> parse_order(const std::string& text) {
  std::vector<int> order;
  for (std::int64_t v : parse_int_list(text, "mode order")) order.push_back(static_cast<int>(v));
  return order;
}

std::string gb_string(std::int64_t bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", static_cast<double>(bytes) / 1e9);
  return buf;
}

std::string format_sizes_gb(const std::vector<std::int64_t>& element_counts) {
  std::string out;
  for (std::size_t i = 0; i < element_counts.size(); ++i) {
    if (i > 0) out += " -> ";
    out += gb_string(element_counts[i] * 8);
  }
  return out + " GB";
}

std::string order_string(const std::vector<int>& order) {
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(order[i]);
  }
  return out;
}

ModeSelector parse_selector_spec(const std::string& spec) {
  if (spec == "sum") return ModeSelector::sum();
  if (spec.rfind("ds:", 0) == 0) return ModeSelector::downsample(std::stoll(spec.substr(3)));
  const std::size_t c1 = spec.find(':');
  if (c1 == std::string::npos) return ModeSelector::single(std::stoll(spec));
  const std::size_t c2 = spec.find(':', c1 + 1);
  const std::int64_t start = std::stoll(spec.substr(0, c1));
  if (c2 == std::string::npos) {
    return ModeSelector::range(start, std::stoll(spec.substr(c1 + 1)), 1);
  }
  return ModeSelector::range(start, std::stoll(spec.substr(c1 + 1, c2 - c1 - 1)),
                             std::stoll(spec.substr(c2 + 1)));
}

struct CompressArgs {
  std::string input, output;
  double tolerance = -1.0;
  std::string ranks, grid, order, preprocess = "none", backend = "serial";
  int slice_mode = 0;
};

int do_compress(const CompressArgs& a, std::ostream& out) {
  RawTensorMeta meta;
  DenseTensor tensor = read_raw_tensor(a.input, &meta);

  if ((a.tolerance >= 0.0) == !a.ranks.empty()) {
    throw DimensionError("exactly one of --tol and --ranks is required");
  }

  CompressOptions options;
  if (a.tolerance >= 0.0) options.tolerance = a.tolerance;
  if (!a.ranks.empty()) options.fixed_ranks = parse_int_list(a.ranks, "ranks");
  if (!a.order.empty()) options.mode_order = parse_order(a.order);

  const ScalingMethod method = scaling_method_from_name(a.preprocess);
  std::optional<SliceScaling> scaling;
  DenseTensor working = tensor;
  if (method != ScalingMethod::none) {
    scaling = compute_scaling(working, method, a.slice_mode);
    apply_scaling(working, *scaling);
  }

  TuckerModel model;
  std::string ledger;
  if (!a.grid.empty()) {
    const ProcessorGrid grid{Shape(parse_int_list(a.grid, "grid"))};
    const BlockMap map = BlockMap::checked(working.shape(), grid);
    const DistributedTensor dist = scatter(working, map);
    VirtualComm comm(grid.total_ranks(),
                     a.backend == "threaded" ? CommBackend::threaded : CommBackend::serial);
    model = sthosvd_distributed(dist, options, comm);
    ledger = comm.ledger_report();
  } else {
    model = sthosvd(working, options);
  }
  model.method = method;
  model.scaling = scaling;
  if (meta.generator) {
    model.generator = *meta.generator;
    model.seed = meta.seed.value_or(0);
  }

  save_model(a.output, model);

  out << "source dims: " << model.source_dims.to_string() << "\n";
  out << "core dims:   " << model.core.shape().to_string() << "\n";
  out << "mode order:  " << order_string(model.mode_order) << "\n";
  const StorageAccounting acc = storage_accounting(model);
  out << "model storage: " << acc.elements << " elements, " << acc.bytes << " bytes ("
      << std::setprecision(4) << static_cast<double>(acc.bytes) / 1e6 << " MB)\n";
  out << "compression ratio: " << std::setprecision(4) << acc.compression_ratio << "\n";
  out << "relative error (compression domain): " << std::setprecision(6)
      << model.achieved_relative_error << "\n";
  out << "relative error (original domain):    " << std::setprecision(6)
      << reconstruction_error(tensor, model) << "\n";
  if (!ledger.empty()) out << ledger;
  return 0;
}

struct ReconstructArgs {
  std::string model, output, order = "auto-mem";
  std::vector<std::string> selects;
  std::int64_t mem_cap_bytes = 0;
};

int do_reconstruct(const ReconstructArgs& a, std::ostream& out) {
  const TuckerModel model = load_model(a.model);
  const int n = model.order();

  std::vector<ModeSelector> selectors(static_cast<std::size_t>(n), ModeSelector::full());
  for (const std::string& item : a.selects) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw DimensionError("selector '" + item + "' is not of the form mode=spec");
    }
    const int mode = std::stoi(item.substr(0, eq));
    if (mode < 0 || mode >= n) throw BoundsError("selector names invalid mode " + item);
    selectors[static_cast<std::size_t>(mode)] = parse_selector_spec(item.substr(eq + 1));
  }

  std::vector<std::int64_t> out_dims(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    out_dims[static_cast<std::size_t>(m)] =
        selectors[static_cast<std::size_t>(m)].output_extent(model.source_dims.extent(m));
  }

  PartialReconstructOptions options;
  options.memory_cap_bytes = a.mem_cap_bytes;
  const std::vector<std::int64_t>& core_dims = model.core.shape().dims();
  if (a.order == "auto-flops") {
    options.order = optimal_order(core_dims, out_dims, OrderingObjective::flops);
  } else if (a.order == "auto-mem") {
    options.order = optimal_order(core_dims, out_dims, OrderingObjective::memory);
  } else {
    options.order = parse_order(a.order);
  }

  const PartialResult result = partial_reconstruct(model, selectors, options);
  write_raw_tensor(a.output, result.tensor);

  out << "order: " << order_string(result.order) << "\n";
  out << "intermediate sizes: " << format_sizes_gb(result.planned_sizes) << "\n";
  out << "peak intermediate: " << gb_string(result.peak_intermediate_elements * 8) << " GB\n";
  out << "peak workspace:    " << gb_string(result.peak_workspace_elements * 8) << " GB\n";
  out << "output dims: " << result.tensor.shape().to_string() << "\n";
  return 0;
}

struct GenerateArgs {
  std::string dims, ranks, output;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int do_generate(const GenerateArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  spec.dims = Shape(parse_int_list(a.dims, "dims"));
  spec.ranks = parse_int_list(a.ranks, "ranks");
  spec.noise = a.noise;
  spec.seed = a.seed;

  const SyntheticResult result = generate_synthetic(spec);

  RawTensorMeta meta;
  meta.generator = kGeneratorName;
  meta.seed = spec.seed;
  meta.ranks = spec.ranks;
  meta.noise = spec.noise;
  write_raw_tensor(a.output, result.tensor, &meta);

  out << "dims: " << spec.dims.to_string() << "\n";
  out << "norm: " << std::setprecision(8) << result.tensor_norm << "\n";
  if (spec.noise > 0.0) {
    out << "measured relative noise: " << std::setprecision(4)
        << result.noise_norm / result.tensor_norm << "\n";
  }
  return 0;
}

int do_stats(const std::string& input, int slice_mode, std::ostream& out) {
  const DenseTensor tensor = read_raw_tensor(input);
  const std::vector<SliceStats> stats = slice_statistics(tensor, slice_mode);
  out << "slice statistics, mode " << slice_mode << " (" << stats.size() << " slices)\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %14s %14s %14s %14s %14s %14s\n", "slice", "mean",
                "stddev", "min", "max", "one_norm", "two_norm");
  out << line;
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const SliceStats& s = stats[k];
    std::snprintf(line, sizeof(line), "%-6zu %14.6g %14.6g %14.6g %14.6g %14.6g %14.6g\n", k,
                  s.mean, s.stddev, s.min, s.max, s.one_norm, s.two_norm);
    out << line;
  }
  return 0;
}

int do_info(const std::string& dir, std::ostream& out) {
  const TuckerModel model = load_model(dir);
  out << "source dims: " << model.source_dims.to_string() << "\n";
  out << "core dims:   " << model.core.shape().to_string() << "\n";
  out << "tolerance:   " << model.tolerance << "\n";
  out << "mode order:  " << order_string(model.mode_order) << "\n";
  out << "preprocess:  " << scaling_method_name(model.method);
  if (model.scaling) out << " (slice mode " << model.scaling->mode << ")";
  out << "\n";
  out << "achieved relative error: " << model.achieved_relative_error << "\n";
  if (!model.generator.empty()) {
    out << "generator: " << model.generator << " seed " << model.seed << "\n";
  }
  const StorageAccounting acc = storage_accounting(model);
  out << "model storage: " << acc.elements << " elements, " << acc.bytes << " bytes\n";
  out << "compression ratio: " << std::setprecision(4) << acc.compression_ratio << "\n";
  for (int n = 0; n < model.order(); ++n) {
    const std::vector<double>& spectrum = model.spectra[static_cast<std::size_t>(n)];
    out << "mode " << n << ": rank " << model.core.shape().extent(n) << " of "
        << model.source_dims.extent(n) << ", leading eigenvalue "
        << (spectrum.empty() ? 0.0 : spectrum.front()) << "\n";
  }
  return 0;
}

struct PlanArgs {
  std::string dims, ranks, grid, orderings;
};

int do_plan(const PlanArgs& a, std::ostream& out) {
  const Shape dims(parse_int_list(a.dims, "dims"));
  const std::vector<std::int64_t> ranks = parse_int_list(a.ranks, "ranks");
  const Shape grid(parse_int_list(a.grid, "grid"));
  const int n = dims.order();

  std::vector<std::int64_t> out_dims(dims.dims());
  const std::vector<int> flops_best =
      optimal_order(ranks, out_dims, OrderingObjective::flops);
  const std::vector<int> mem_best = optimal_order(ranks, out_dims, OrderingObjective::memory);
  const std::vector<int> bw_best =
      optimal_order(ranks, out_dims, OrderingObjective::bandwidth, grid.dims());

  std::vector<std::vector<int>> orders;
  if (a.orderings == "all") {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      orders.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else if (!a.orderings.empty()) {
    std::stringstream in(a.orderings);
    std::string token;
    while (std::getline(in, token, ';')) orders.push_back(parse_order(token));
  } else {
    std::vector<int> natural(static_cast<std::size_t>(n));
    std::iota(natural.begin(), natural.end(), 0);
    for (const std::vector<int>& candidate : {natural, flops_best, mem_best, bw_best}) {
      if (std::find(orders.begin(), orders.end(), candidate) == orders.end()) {
        orders.push_back(candidate);
      }
    }
  }

  out << "compression cost plan, dims " << dims.to_string() << " ranks ";
  for (std::size_t i = 0; i < ranks.size(); ++i) out << (i ? "," : "") << ranks[i];
  out << " grid " << grid.to_string() << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %14s %14s %12s %14s %s\n", "order", "flops", "words",
                "messages", "temp_words", "tags");
  out << line;
  for (const std::vector<int>& order : orders) {
    const CostEstimate cost = plan_sthosvd_cost(dims, ranks, grid, order);
    std::string tags;
    if (order == flops_best) tags += " flops-opt";
    if (order == mem_best) tags += " mem-opt";
    if (order == bw_best) tags += " bandwidth-opt";
    std::snprintf(line, sizeof(line), "%-16s %14.6g %14.6g %12.6g %14.6g%s\n",
                  order_string(order).c_str(), cost.flops, cost.words, cost.messages,
                  cost.peak_temp_words, tags.c_str());
    out << line;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tucker tensor compression toolkit"};
  app.require_subcommand(1);

  CompressArgs compress;
  CLI::App* c = app.add_subcommand("compress", "Compress a raw tensor into a model archive");
  c->add_option("--input", compress.input, "raw tensor file")->required();
  c->add_option("--output", compress.output, "model archive directory")->required();
  c->add_option("--tol", compress.tolerance, "relative error tolerance");
  c->add_option("--ranks", compress.ranks, "fixed core extents, comma separated");
  c->add_option("--grid", compress.grid, "virtual processor grid, comma separated");
  c->add_option("--order", compress.order, "mode order, comma separated");
  c->add_option("--preprocess", compress.preprocess, "none|standardize|maxscale");
  c->add_option("--slice-mode", compress.slice_mode, "hyperslice mode for preprocessing");
  c->add_option("--backend", compress.backend, "serial|threaded virtual communicator");

  ReconstructArgs reconstruct;
  CLI::App* r = app.add_subcommand("reconstruct", "Reconstruct (a selection of) a model");
  r->add_option("--model", reconstruct.model, "model archive directory")->required();
  r->add_option("--output", reconstruct.output, "raw tensor output")->required();
  r->add_option("--select", reconstruct.selects,
                "per-mode selector mode=k | mode=a:b:s | mode=ds:f | mode=sum");
  r->add_option("--order", reconstruct.order, "auto-flops | auto-mem | explicit permutation");
  r->add_option("--mem-cap-bytes", reconstruct.mem_cap_bytes,
                "abort if a planned intermediate exceeds this size");

  GenerateArgs generate;
  CLI::App* g = app.add_subcommand("generate", "Generate a seeded synthetic tensor");
  g->add_option("--dims", generate.dims, "tensor extents, comma separated")->required();
  g->add_option("--ranks", generate.ranks, "multilinear ranks, comma separated")->required();
  g->add_option("--noise", generate.noise, "relative noise level");
  g->add_option("--seed", generate.seed, "generator seed");
  g->add_option("--output", generate.output, "raw tensor output")->required();

  std::string stats_input;
  int stats_mode = 0;
  CLI::App* s = app.add_subcommand("stats", "Hyperslice statistics of a raw tensor");
  s->add_option("--input", stats_input, "raw tensor file")->required();
  s->add_option("--slice-mode", stats_mode, "mode whose slices are summarized")->required();

  std::string info_model;
  CLI::App* i = app.add_subcommand("info", "Describe a model archive");
  i->add_option("--model", info_model, "model archive directory")->required();

  PlanArgs plan;
  CLI::App* p = app.add_subcommand("plan", "Cost model for compression runs");
  p->add_option("--dims", plan.dims, "tensor extents, comma separated")->required();
  p->add_option("--ranks", plan.ranks, "core extents, comma separated")->required();
  p->add_option("--grid", plan.grid, "processor grid, comma separated")->required();
  p->add_option("--orderings", plan.orderings, "all | semicolon-separated permutations");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // Help request.
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (c->parsed()) return do_compress(compress, out);
    if (r->parsed()) return do_reconstruct(reconstruct, out);
    if (g->parsed()) return do_generate(generate, out);
    if (s->parsed()) return do_stats(stats_input, stats_mode, out);
    if (i->parsed()) return do_info(info_model, out);
    if (p->parsed()) return do_plan(plan, out);
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace tucker::cli
