#include "tucker/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tucker/local_kernels.hpp"
#include "tucker/parallel_kernels.hpp"

namespace tucker {

ModeSelector ModeSelector::full() { return {}; }

ModeSelector ModeSelector::single(std::int64_t index) {
  ModeSelector s;
  s.kind = Kind::single_index;
  s.index = index;
  return s;
}

ModeSelector ModeSelector::range(std::int64_t start, std::int64_t stop, std::int64_t stride) {
  ModeSelector s;
  s.kind = Kind::range;
  s.start = start;
  s.stop = stop;
  s.stride = stride;
  return s;
}

ModeSelector ModeSelector::downsample(std::int64_t factor) {
  ModeSelector s;
  s.kind = Kind::downsample_mean;
  s.factor = factor;
  return s;
}

ModeSelector ModeSelector::sum() {
  ModeSelector s;
  s.kind = Kind::sum_all;
  return s;
}

ModeSelector ModeSelector::matrix(Matrix m) {
  ModeSelector s;
  s.kind = Kind::matrix;
  s.explicit_matrix = std::move(m);
  return s;
}

std::int64_t ModeSelector::output_extent(std::int64_t source_extent) const {
  switch (kind) {
    case Kind::full:
      return source_extent;
    case Kind::single_index:
      return 1;
    case Kind::range:
      return (stop - start + stride - 1) / stride;
    case Kind::downsample_mean:
      return (source_extent + factor - 1) / factor;
    case Kind::sum_all:
      return 1;
    case Kind::matrix:
      return explicit_matrix.rows();
  }
  return source_extent;
}

Matrix build_selector(const ModeSelector& selector, std::int64_t extent) {
  switch (selector.kind) {
    case ModeSelector::Kind::full:
      return Matrix::identity(extent);
    case ModeSelector::Kind::single_index: {
      if (selector.index < 0 || selector.index >= extent) {
        throw BoundsError("selector index " + std::to_string(selector.index) +
                          " out of range for extent " + std::to_string(extent));
      }
      Matrix m(1, extent);
      m(0, selector.index) = 1.0;
      return m;
    }
    case ModeSelector::Kind::range: {
      if (selector.stride < 1 || selector.start < 0 || selector.stop > extent ||
          selector.start >= selector.stop) {
        throw BoundsError("selector range [" + std::to_string(selector.start) + "," +
                          std::to_string(selector.stop) + ") stride " +
                          std::to_string(selector.stride) + " invalid for extent " +
                          std::to_string(extent));
      }
      const std::int64_t rows = selector.output_extent(extent);
      Matrix m(rows, extent);
      for (std::int64_t r = 0; r < rows; ++r) m(r, selector.start + r * selector.stride) = 1.0;
      return m;
    }
    case ModeSelector::Kind::downsample_mean: {
      if (selector.factor < 1) {
        throw BoundsError("downsample factor must be at least 1");
      }
      const std::int64_t rows = selector.output_extent(extent);
      Matrix m(rows, extent);
      for (std::int64_t r = 0; r < rows; ++r) {
        const std::int64_t lo = r * selector.factor;
        const std::int64_t hi = std::min(lo + selector.factor, extent);
        for (std::int64_t c = lo; c < hi; ++c) m(r, c) = 1.0 / static_cast<double>(hi - lo);
      }
      return m;
    }
    case ModeSelector::Kind::sum_all: {
      Matrix m(1, extent);
      for (std::int64_t c = 0; c < extent; ++c) m(0, c) = 1.0;
      return m;
    }
    case ModeSelector::Kind::matrix: {
      if (selector.explicit_matrix.cols() != extent) {
        throw DimensionError("explicit selector has " +
                             std::to_string(selector.explicit_matrix.cols()) +
                             " columns but the mode extent is " + std::to_string(extent));
      }
      if (selector.explicit_matrix.rows() < 1) {
        throw DimensionError("explicit selector must have at least one row");
      }
      return selector.explicit_matrix;
    }
  }
  throw DimensionError("unknown selector kind");
}

std::vector<std::int64_t> intermediate_sizes(std::span<const std::int64_t> core_dims,
                                             std::span<const std::int64_t> out_dims,
                                             std::span<const int> order) {
  const std::size_t n = core_dims.size();
  std::vector<std::int64_t> dims(core_dims.begin(), core_dims.end());
  std::vector<std::int64_t> sizes;
  sizes.reserve(order.size() + 1);
  auto product = [&dims] {
    std::int64_t p = 1;
    for (std::int64_t d : dims) p *= d;
    return p;
  };
  sizes.push_back(product());
  for (int m : order) {
    if (m < 0 || static_cast<std::size_t>(m) >= n) throw BoundsError("order names invalid mode");
    dims[static_cast<std::size_t>(m)] = out_dims[static_cast<std::size_t>(m)];
    sizes.push_back(product());
  }
  return sizes;
}

namespace {

// Pairwise precedence for one objective, reduced to exact integer key
// comparisons so the sort is a strict weak ordering.
struct ModeKeys {
  OrderingObjective objective;
  std::vector<std::int64_t> r, k, p;

  bool precedes(int i, int j) const {
    const std::int64_t ri = r[static_cast<std::size_t>(i)], rj = r[static_cast<std::size_t>(j)];
    const std::int64_t ki = k[static_cast<std::size_t>(i)], kj = k[static_cast<std::size_t>(j)];
    switch (objective) {
      case OrderingObjective::flops:
        // K_i R_i R_j + K_i R_j K_j < R_i R_j K_j + R_i K_i K_j, i.e. the
        // per-pair key (R-K)/(RK) sorts descending.
        return (ri - ki) * rj * kj > (rj - kj) * ri * ki;
      case OrderingObjective::memory:
        // Shrink the most aggressive modes first: descending R/K.
        return ri * kj > rj * ki;
      case OrderingObjective::bandwidth: {
        // Angle order of the vectors (K(P-1), R-K); equivalent to
        // R_j K_i (P_i-1) + K_i K_j (P_j-1) < R_i K_j (P_j-1) + K_i K_j (P_i-1)
        // wherever that comparison is strict.
        const std::int64_t ai = ki * (p[static_cast<std::size_t>(i)] - 1);
        const std::int64_t aj = kj * (p[static_cast<std::size_t>(j)] - 1);
        std::int64_t bi = ri - ki, bj = rj - kj;
        auto cls = [](std::int64_t a, std::int64_t b) {
          if (a == 0 && b > 0) return 0;
          if (a == 0 && b < 0) return 2;
          return 1;  // includes the cost-neutral origin
        };
        const int ci = cls(ai, bi), cj = cls(aj, bj);
        if (ci != cj) return ci < cj;
        if (ci != 1) return false;  // same boundary class: tie
        // Descending b/a with a > 0; the origin counts as ratio zero.
        const std::int64_t di = ai == 0 ? 1 : ai;
        const std::int64_t dj = aj == 0 ? 1 : aj;
        if (ai == 0) bi = 0;
        if (aj == 0) bj = 0;
        return bi * dj > bj * di;
      }
    }
    return false;
  }
};

}  // namespace

std::vector<int> optimal_order(std::span<const std::int64_t> core_dims,
                               std::span<const std::int64_t> out_dims, OrderingObjective objective,
                               std::span<const std::int64_t> grid_dims) {
  const std::size_t n = core_dims.size();
  if (out_dims.size() != n) throw DimensionError("core and output orders differ");
  if (objective == OrderingObjective::bandwidth && grid_dims.size() != n) {
    throw DimensionError("bandwidth ordering needs the grid extents");
  }
  ModeKeys keys;
  keys.objective = objective;
  keys.r.assign(core_dims.begin(), core_dims.end());
  keys.k.assign(out_dims.begin(), out_dims.end());
  keys.p.assign(grid_dims.begin(), grid_dims.end());
  if (keys.p.empty()) keys.p.assign(n, 1);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&keys](int i, int j) { return keys.precedes(i, j); });
  return order;
}

double ordering_objective_value(std::span<const std::int64_t> core_dims,
                                std::span<const std::int64_t> out_dims,
                                std::span<const int> order, OrderingObjective objective,
                                std::span<const std::int64_t> grid_dims) {
  const std::size_t n = core_dims.size();
  std::vector<double> dims(core_dims.begin(), core_dims.end());
  auto product_except = [&dims](int skip) {
    double p = 1.0;
    for (std::size_t q = 0; q < dims.size(); ++q) {
      if (static_cast<int>(q) != skip) p *= dims[q];
    }
    return p;
  };

  if (objective == OrderingObjective::memory) {
    const std::vector<std::int64_t> sizes = intermediate_sizes(core_dims, out_dims, order);
    return static_cast<double>(*std::max_element(sizes.begin(), sizes.end()));
  }

  double total = 0.0;
  for (int m : order) {
    const double km = static_cast<double>(out_dims[static_cast<std::size_t>(m)]);
    if (objective == OrderingObjective::flops) {
      total += km * dims[static_cast<std::size_t>(m)] * product_except(m);
    } else {
      const double pm = grid_dims.size() == n
                            ? static_cast<double>(grid_dims[static_cast<std::size_t>(m)])
                            : 1.0;
      total += km * (pm - 1.0) * product_except(m);
    }
    dims[static_cast<std::size_t>(m)] = km;
  }
  return total;
}

namespace {

std::string dims_to_string(std::span<const std::int64_t> dims) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) out << "x";
    out << dims[i];
  }
  return out.str();
}

// Row sums of the selector matrix; the weight each output index gives to a
// term that is constant along this mode.
std::vector<double> selector_row_sums(const ModeSelector& selector, std::int64_t extent) {
  switch (selector.kind) {
    case ModeSelector::Kind::sum_all:
      return {static_cast<double>(extent)};
    case ModeSelector::Kind::matrix: {
      std::vector<double> sums(static_cast<std::size_t>(selector.explicit_matrix.rows()), 0.0);
      for (std::int64_t r = 0; r < selector.explicit_matrix.rows(); ++r) {
        for (std::int64_t c = 0; c < selector.explicit_matrix.cols(); ++c) {
          sums[static_cast<std::size_t>(r)] += selector.explicit_matrix(r, c);
        }
      }
      return sums;
    }
    default:
      // full, single index, range, and downsample rows all sum to one.
      return std::vector<double>(static_cast<std::size_t>(selector.output_extent(extent)), 1.0);
  }
}

}  // namespace

PartialResult partial_reconstruct(const TuckerModel& model,
                                  const std::vector<ModeSelector>& selectors,
                                  const PartialReconstructOptions& options) {
  const int order_n = model.order();
  if (static_cast<int>(selectors.size()) != order_n) {
    throw DimensionError("need one selector per mode");
  }

  std::vector<int> order = options.order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(order_n));
    std::iota(order.begin(), order.end(), 0);
  }
  if (static_cast<int>(order.size()) != order_n) {
    throw DimensionError("reconstruction order must name every mode exactly once");
  }
  {
    std::vector<bool> seen(static_cast<std::size_t>(order_n), false);
    for (int m : order) {
      if (m < 0 || m >= order_n || seen[static_cast<std::size_t>(m)]) {
        throw DimensionError("reconstruction order is not a permutation");
      }
      seen[static_cast<std::size_t>(m)] = true;
    }
  }

  const std::vector<std::int64_t>& core_dims = model.core.shape().dims();
  std::vector<std::int64_t> out_dims(static_cast<std::size_t>(order_n));
  for (int m = 0; m < order_n; ++m) {
    out_dims[static_cast<std::size_t>(m)] =
        selectors[static_cast<std::size_t>(m)].output_extent(model.source_dims.extent(m));
  }

  PartialResult result;
  result.order = order;
  result.planned_sizes = intermediate_sizes(core_dims, out_dims, order);

  // Plan-time memory guard: no tensor work happens past an oversized plan.
  const std::int64_t default_cap =
      4 * 8 *
      std::max(model.core.shape().product(),
               std::accumulate(out_dims.begin(), out_dims.end(), std::int64_t{1},
                               std::multiplies<>()));
  const std::int64_t cap_bytes = options.memory_cap_bytes > 0 ? options.memory_cap_bytes : default_cap;
  {
    std::vector<std::int64_t> dims(core_dims.begin(), core_dims.end());
    for (std::size_t t = 0; t < order.size(); ++t) {
      dims[static_cast<std::size_t>(order[t])] = out_dims[static_cast<std::size_t>(order[t])];
      const std::int64_t bytes = result.planned_sizes[t + 1] * 8;
      if (bytes > cap_bytes) {
        throw BoundsError("planned intermediate " + dims_to_string(dims) + " needs " +
                          std::to_string(bytes) + " bytes, above the memory cap of " +
                          std::to_string(cap_bytes) + " bytes; pick another order or raise the cap");
      }
    }
  }

  // Selector-times-factor products are computed first; every chain operand
  // is then bounded by core-side dimensions.
  const SliceScaling* scaling = model.scaling ? &*model.scaling : nullptr;
  std::vector<Matrix> chain(static_cast<std::size_t>(order_n));
  std::vector<double> slice_shift;
  for (int m = 0; m < order_n; ++m) {
    const Matrix& u = model.factors[static_cast<std::size_t>(m)];
    const ModeSelector& sel = selectors[static_cast<std::size_t>(m)];
    if (scaling && m == scaling->mode) {
      // Fold the inverse scaling into this mode: C diag(scale) U for the
      // linear part, with the shifted constant C * shift added afterwards.
      Matrix c = build_selector(sel, model.source_dims.extent(m));
      slice_shift.resize(static_cast<std::size_t>(c.rows()), 0.0);
      for (std::int64_t i = 0; i < c.rows(); ++i) {
        double h = 0.0;
        for (std::int64_t q = 0; q < c.cols(); ++q) {
          h += c(i, q) * scaling->shift[static_cast<std::size_t>(q)];
          c(i, q) *= scaling->scale[static_cast<std::size_t>(q)];
        }
        slice_shift[static_cast<std::size_t>(i)] = h;
      }
      chain[static_cast<std::size_t>(m)] = matmul(c, u);
    } else if (sel.kind == ModeSelector::Kind::full) {
      // Identity selector: skip the selector product entirely.
      chain[static_cast<std::size_t>(m)] = u;
    } else {
      chain[static_cast<std::size_t>(m)] =
          matmul(build_selector(sel, model.source_dims.extent(m)), u);
    }
  }

  DenseTensor current = model.core;
  result.peak_intermediate_elements = current.size();
  for (int m : order) {
    DenseTensor next = ttm(current, m, chain[static_cast<std::size_t>(m)]);
    result.peak_workspace_elements =
        std::max(result.peak_workspace_elements, current.size() + next.size());
    current = std::move(next);
    result.peak_intermediate_elements = std::max(result.peak_intermediate_elements, current.size());
  }

  if (scaling) {
    // Add back the selected shift constants. The shift tensor is constant
    // along every mode but the slice mode, so each other selector
    // contributes its row sum as a weight.
    std::vector<std::vector<double>> weights(static_cast<std::size_t>(order_n));
    for (int m = 0; m < order_n; ++m) {
      if (m == scaling->mode) {
        weights[static_cast<std::size_t>(m)] = slice_shift;
      } else {
        weights[static_cast<std::size_t>(m)] = selector_row_sums(
            selectors[static_cast<std::size_t>(m)], model.source_dims.extent(m));
      }
    }
    const Shape& shape = current.shape();
    for (std::int64_t lin = 0; lin < current.size(); ++lin) {
      const std::vector<std::int64_t> idx = linear_to_index(lin, shape);
      double term = 1.0;
      for (int m = 0; m < order_n; ++m) {
        term *= weights[static_cast<std::size_t>(m)]
                       [static_cast<std::size_t>(idx[static_cast<std::size_t>(m)])];
      }
      current[lin] += term;
    }
  }

  result.tensor = std::move(current);
  return result;
}

DistributedTensor reconstruct_full_distributed(const TuckerModel& model,
                                               const ProcessorGrid& grid, VirtualComm& comm,
                                               std::span<const int> order) {
  const int n = model.order();
  std::vector<int> chain(order.begin(), order.end());
  if (chain.empty()) {
    chain.resize(static_cast<std::size_t>(n));
    std::iota(chain.begin(), chain.end(), 0);
  }

  // The core may be smaller than the grid in some modes; ranks start empty
  // and fill up as the tensor expands.
  DistributedTensor current =
      scatter(model.core, BlockMap::permissive(model.core.shape(), grid));
  for (int m : chain) {
    current = par_ttm(current, m, model.factors[static_cast<std::size_t>(m)], comm);
  }

  if (model.scaling) {
    const SliceScaling& scaling = *model.scaling;
    const BlockMap& map = current.map();
    for (int rank = 0; rank < map.grid().total_ranks(); ++rank) {
      DenseTensor& block = current.local(rank);
      if (block.size() == 0) continue;
      const std::vector<std::int64_t> coords = map.grid().coords_of(rank);
      const IndexRange owned =
          map.owned_range(scaling.mode, coords[static_cast<std::size_t>(scaling.mode)]);
      const Shape& shape = block.shape();
      const std::int64_t below = shape.product_below(scaling.mode);
      const std::int64_t above = shape.product_above(scaling.mode);
      for (std::int64_t b = 0; b < above; ++b) {
        for (std::int64_t k = 0; k < owned.length; ++k) {
          const double scale = scaling.scale[static_cast<std::size_t>(owned.start + k)];
          const double shift = scaling.shift[static_cast<std::size_t>(owned.start + k)];
          double* base = block.values().data() + (b * owned.length + k) * below;
          for (std::int64_t c = 0; c < below; ++c) base[c] = base[c] * scale + shift;
        }
      }
    }
  }
  return current;
}

}  // namespace tucker
