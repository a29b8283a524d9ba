#include "tucker/sthosvd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tucker {

namespace {

std::vector<int> resolve_order(const CompressOptions& options, int order) {
  std::vector<int> modes = options.mode_order;
  if (modes.empty()) {
    modes.resize(static_cast<std::size_t>(order));
    for (int n = 0; n < order; ++n) modes[static_cast<std::size_t>(n)] = n;
    return modes;
  }
  if (static_cast<int>(modes.size()) != order) {
    throw DimensionError("mode order has " + std::to_string(modes.size()) + " entries for order " +
                         std::to_string(order));
  }
  std::vector<bool> seen(static_cast<std::size_t>(order), false);
  for (int m : modes) {
    if (m < 0 || m >= order || seen[static_cast<std::size_t>(m)]) {
      throw DimensionError("mode order is not a permutation");
    }
    seen[static_cast<std::size_t>(m)] = true;
  }
  return modes;
}

void validate_options(const CompressOptions& options, const Shape& dims) {
  if (options.tolerance < 0.0) throw DimensionError("tolerance must be nonnegative");
  if (options.fixed_ranks) {
    if (static_cast<int>(options.fixed_ranks->size()) != dims.order()) {
      throw DimensionError("fixed ranks must name every mode");
    }
    for (int n = 0; n < dims.order(); ++n) {
      const std::int64_t r = (*options.fixed_ranks)[static_cast<std::size_t>(n)];
      if (r < 1 || r > dims.extent(n)) {
        throw DimensionError("fixed rank " + std::to_string(r) + " out of range in mode " +
                             std::to_string(n));
      }
    }
  }
}

double achieved_error(double norm_x, double core_norm) {
  if (norm_x == 0.0) return 0.0;
  const double residual_sq = std::max(0.0, norm_x * norm_x - core_norm * core_norm);
  return std::sqrt(residual_sq) / norm_x;
}

}  // namespace

TuckerModel sthosvd(const DenseTensor& tensor, const CompressOptions& options) {
  validate_options(options, tensor.shape());
  const int order = tensor.shape().order();
  const std::vector<int> modes = resolve_order(options, order);

  TuckerModel model;
  model.source_dims = tensor.shape();
  model.tolerance = options.tolerance;
  model.mode_order = modes;
  model.norm_x = tensor.norm();
  model.factors.resize(static_cast<std::size_t>(order));
  model.spectra.resize(static_cast<std::size_t>(order));

  const double threshold =
      options.tolerance * options.tolerance * model.norm_x * model.norm_x / order;

  DenseTensor partial = tensor;
  for (int n : modes) {
    const Matrix s = gram(partial, n);
    const EigenDecomposition eig = sym_eig(s);
    model.spectra[static_cast<std::size_t>(n)] = eig.values;
    const std::int64_t rank = options.fixed_ranks
                                  ? (*options.fixed_ranks)[static_cast<std::size_t>(n)]
                                  : select_rank(eig.values, threshold);
    const Matrix u = leading_vectors(eig, rank);
    model.factors[static_cast<std::size_t>(n)] = u;
    partial = ttm(partial, n, u.transposed());
  }
  model.core = std::move(partial);
  model.achieved_relative_error = achieved_error(model.norm_x, model.core.norm());
  return model;
}

TuckerModel sthosvd_distributed(const DistributedTensor& dist, const CompressOptions& options,
                                VirtualComm& comm) {
  const BlockMap& initial_map = dist.map();
  validate_options(options, initial_map.tensor_dims());
  if (comm.world_size() != initial_map.grid().total_ranks()) {
    throw DimensionError("communicator has " + std::to_string(comm.world_size()) +
                         " ranks but the grid needs " +
                         std::to_string(initial_map.grid().total_ranks()));
  }
  const int order = initial_map.tensor_dims().order();
  const std::vector<int> modes = resolve_order(options, order);
  const int world = comm.world_size();

  std::vector<std::vector<Matrix>> factors_by_rank(static_cast<std::size_t>(world));
  std::vector<std::vector<std::vector<double>>> spectra_by_rank(static_cast<std::size_t>(world));
  std::vector<DenseTensor> final_locals(static_cast<std::size_t>(world));
  std::vector<double> norms(static_cast<std::size_t>(world));
  std::vector<std::int64_t> final_extents(static_cast<std::size_t>(order), 0);

  comm.run([&](RankContext& ctx) {
    const int rank = ctx.rank();
    DenseTensor local = dist.local(rank);
    BlockMap map = initial_map;

    const double norm_x = dist_norm_rank(local, ctx);
    norms[static_cast<std::size_t>(rank)] = norm_x;
    const double threshold = options.tolerance * options.tolerance * norm_x * norm_x / order;

    std::vector<Matrix> factors(static_cast<std::size_t>(order));
    std::vector<std::vector<double>> spectra(static_cast<std::size_t>(order));

    for (int n : modes) {
      const Matrix s = par_gram_rank(local, map, n, ctx);
      // Redundant on every rank; inputs are bitwise identical so the
      // decomposition and the chosen rank agree everywhere.
      const double extent = static_cast<double>(s.rows());
      ctx.ledger().charge_flops((10.0 / 3.0) * extent * extent * extent);
      const EigenDecomposition eig = sym_eig(s);
      spectra[static_cast<std::size_t>(n)] = eig.values;
      const std::int64_t rank_n = options.fixed_ranks
                                      ? (*options.fixed_ranks)[static_cast<std::size_t>(n)]
                                      : select_rank(eig.values, threshold);
      const Matrix u = leading_vectors(eig, rank_n);
      factors[static_cast<std::size_t>(n)] = u;
      local = par_ttm_rank(local, map, n, u.transposed(), ctx);
      map = map.with_extent(n, rank_n);
    }

    factors_by_rank[static_cast<std::size_t>(rank)] = std::move(factors);
    spectra_by_rank[static_cast<std::size_t>(rank)] = std::move(spectra);
    final_locals[static_cast<std::size_t>(rank)] = std::move(local);
    if (rank == 0) {
      for (int n = 0; n < order; ++n) {
        final_extents[static_cast<std::size_t>(n)] = map.tensor_dims().extent(n);
      }
    }
  });

  for (int r = 1; r < world; ++r) {
    for (int n = 0; n < order; ++n) {
      if (!(factors_by_rank[static_cast<std::size_t>(r)][static_cast<std::size_t>(n)] ==
            factors_by_rank[0][static_cast<std::size_t>(n)])) {
        throw NumericalError("distributed factors differ across ranks in mode " +
                             std::to_string(n));
      }
    }
  }

  Shape core_dims(final_extents);
  BlockMap core_map = BlockMap::permissive(core_dims, initial_map.grid());
  DistributedTensor core_dist(core_map, std::move(final_locals));

  TuckerModel model;
  model.source_dims = initial_map.tensor_dims();
  model.tolerance = options.tolerance;
  model.mode_order = modes;
  model.norm_x = norms[0];
  model.factors = std::move(factors_by_rank[0]);
  model.spectra = std::move(spectra_by_rank[0]);
  model.core = gather(core_dist);
  model.achieved_relative_error = achieved_error(model.norm_x, model.core.norm());
  return model;
}

TuckerModel hosvd(const DenseTensor& tensor, const CompressOptions& options) {
  validate_options(options, tensor.shape());
  const int order = tensor.shape().order();
  const std::vector<int> modes = resolve_order(options, order);

  TuckerModel model;
  model.source_dims = tensor.shape();
  model.tolerance = options.tolerance;
  model.mode_order = modes;
  model.norm_x = tensor.norm();
  model.factors.resize(static_cast<std::size_t>(order));
  model.spectra.resize(static_cast<std::size_t>(order));

  const double threshold =
      options.tolerance * options.tolerance * model.norm_x * model.norm_x / order;

  // All factors come from the original tensor's unfoldings.
  for (int n = 0; n < order; ++n) {
    const Matrix s = gram(tensor, n);
    const EigenDecomposition eig = sym_eig(s);
    model.spectra[static_cast<std::size_t>(n)] = eig.values;
    const std::int64_t rank = options.fixed_ranks
                                  ? (*options.fixed_ranks)[static_cast<std::size_t>(n)]
                                  : select_rank(eig.values, threshold);
    model.factors[static_cast<std::size_t>(n)] = leading_vectors(eig, rank);
  }

  DenseTensor core = tensor;
  for (int n : modes) {
    core = ttm(core, n, model.factors[static_cast<std::size_t>(n)].transposed());
  }
  model.core = std::move(core);
  model.achieved_relative_error = achieved_error(model.norm_x, model.core.norm());
  return model;
}

DenseTensor expand_core(const TuckerModel& model) {
  DenseTensor out = model.core;
  for (int n = 0; n < model.order(); ++n) {
    out = ttm(out, n, model.factors[static_cast<std::size_t>(n)]);
  }
  return out;
}

DenseTensor reconstruct_full(const TuckerModel& model) {
  DenseTensor out = expand_core(model);
  if (model.scaling) invert_scaling(out, *model.scaling);
  return out;
}

double reconstruction_error(const DenseTensor& original, const TuckerModel& model) {
  const DenseTensor rebuilt = reconstruct_full(model);
  if (rebuilt.shape() != original.shape()) {
    throw DimensionError("model reconstructs " + rebuilt.shape().to_string() + ", original is " +
                         original.shape().to_string());
  }
  double diff_sq = 0.0;
  for (std::int64_t i = 0; i < original.size(); ++i) {
    const double d = original[i] - rebuilt[i];
    diff_sq += d * d;
  }
  const double norm = original.norm();
  return norm == 0.0 ? std::sqrt(diff_sq) : std::sqrt(diff_sq) / norm;
}

double preprocessed_error(const DenseTensor& original, const TuckerModel& model) {
  DenseTensor domain = original;
  if (model.scaling) apply_scaling(domain, *model.scaling);
  const DenseTensor rebuilt = expand_core(model);
  double diff_sq = 0.0;
  for (std::int64_t i = 0; i < domain.size(); ++i) {
    const double d = domain[i] - rebuilt[i];
    diff_sq += d * d;
  }
  const double norm = domain.norm();
  return norm == 0.0 ? std::sqrt(diff_sq) : std::sqrt(diff_sq) / norm;
}

std::vector<double> error_decomposition(const DenseTensor& original, const TuckerModel& model) {
  DenseTensor partial = original;
  if (model.scaling) apply_scaling(partial, *model.scaling);

  std::vector<double> terms;
  terms.reserve(model.mode_order.size());
  for (int n : model.mode_order) {
    const Matrix& u = model.factors[static_cast<std::size_t>(n)];
    const DenseTensor projected = ttm(partial, n, u.transposed());
    const DenseTensor back = ttm(projected, n, u);
    double term = 0.0;
    for (std::int64_t i = 0; i < partial.size(); ++i) {
      const double d = partial[i] - back[i];
      term += d * d;
    }
    terms.push_back(term);
    partial = projected;
  }
  return terms;
}

}  // namespace tucker
