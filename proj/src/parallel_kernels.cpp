#include "tucker/parallel_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tucker {

namespace {

struct LocalLayout {
  std::int64_t mode_extent;  // local extent of the unfolding mode
  std::int64_t block_cols;   // product of local extents below the mode
  std::int64_t block_count;  // product of local extents above the mode
  std::int64_t columns;      // block_cols * block_count
};

LocalLayout local_layout(std::span<const std::int64_t> dims, int mode) {
  LocalLayout l{};
  l.mode_extent = dims[static_cast<std::size_t>(mode)];
  l.block_cols = 1;
  for (int k = 0; k < mode; ++k) l.block_cols *= dims[static_cast<std::size_t>(k)];
  l.block_count = 1;
  for (int k = mode + 1; k < static_cast<int>(dims.size()); ++k) {
    l.block_count *= dims[static_cast<std::size_t>(k)];
  }
  l.columns = l.block_cols * l.block_count;
  return l;
}

PackedBuffer pack_all_to_all_impl(std::span<const double> data,
                                  std::span<const std::int64_t> dims, int mode,
                                  std::int64_t fiber_size) {
  const int order = static_cast<int>(dims.size());
  const LocalLayout l = local_layout(dims, mode);
  const BlockSplit split(l.columns, fiber_size);

  PackedBuffer out;
  out.layout_case = pack_case_for(mode, order);
  out.segment_lengths.resize(static_cast<std::size_t>(fiber_size));
  for (std::int64_t part = 0; part < fiber_size; ++part) {
    out.segment_lengths[static_cast<std::size_t>(part)] = split.length(part) * l.mode_extent;
  }
  out.values.resize(data.size());

  if (fiber_size == 1 || out.layout_case == PackCase::mode0) {
    // Column-major already: destination segments are contiguous column
    // ranges, so the buffer is a pure copy of the local array.
    std::copy(data.begin(), data.end(), out.values.begin());
    out.identity = true;
    return out;
  }

  if (out.layout_case == PackCase::middle) {
    // Convert each row-major block to column-major so every local mode-n
    // fiber is contiguous, then emit destination column ranges in order.
    std::int64_t offset = 0;
    for (std::int64_t part = 0; part < fiber_size; ++part) {
      const IndexRange cols = split.range(part);
      for (std::int64_t c = cols.start; c < cols.end(); ++c) {
        const std::int64_t b = c / l.block_cols;
        const std::int64_t cc = c % l.block_cols;
        const double* src = data.data() + b * l.mode_extent * l.block_cols + cc;
        for (std::int64_t r = 0; r < l.mode_extent; ++r) {
          out.values[static_cast<std::size_t>(offset++)] = src[r * l.block_cols];
        }
      }
    }
    return out;
  }

  // Last mode: one row-major matrix. Each row is cut into destination
  // chunks and row order is preserved, so the receive buffer on the other
  // side is a stack of row-major blocks and needs no unpacking.
  std::int64_t offset = 0;
  for (std::int64_t part = 0; part < fiber_size; ++part) {
    const IndexRange cols = split.range(part);
    for (std::int64_t r = 0; r < l.mode_extent; ++r) {
      const double* src = data.data() + r * l.columns + cols.start;
      std::copy(src, src + cols.length, out.values.begin() + offset);
      offset += cols.length;
    }
  }
  return out;
}

// Accumulates the upper triangle of W += Z Z^T where Z is stored as stacked
// column-major chunks: chunk m holds chunk_rows[m] of every column, rows of
// chunk m sit below those of chunk m-1. Column index runs outermost so the
// addition order per entry is fixed.
void accumulate_chunked_gram(Matrix& w, std::span<const double> received,
                             std::span<const std::int64_t> chunk_rows, std::int64_t cols) {
  const std::size_t chunks = chunk_rows.size();
  std::vector<std::int64_t> offsets(chunks), row_starts(chunks);
  std::int64_t offset = 0, row = 0;
  for (std::size_t m = 0; m < chunks; ++m) {
    offsets[m] = offset;
    row_starts[m] = row;
    offset += chunk_rows[m] * cols;
    row += chunk_rows[m];
  }

  for (std::int64_t c = 0; c < cols; ++c) {
    for (std::size_t m1 = 0; m1 < chunks; ++m1) {
      const std::int64_t rows1 = chunk_rows[m1];
      const double* col1 = received.data() + offsets[m1] + c * rows1;
      for (std::int64_t r1 = 0; r1 < rows1; ++r1) {
        const double v1 = col1[r1];
        if (v1 == 0.0) continue;
        const std::int64_t g1 = row_starts[m1] + r1;
        for (std::int64_t r2 = r1; r2 < rows1; ++r2) {
          w(g1, row_starts[m1] + r2) += v1 * col1[r2];
        }
        for (std::size_t m2 = m1 + 1; m2 < chunks; ++m2) {
          const std::int64_t rows2 = chunk_rows[m2];
          const double* col2 = received.data() + offsets[m2] + c * rows2;
          for (std::int64_t r2 = 0; r2 < rows2; ++r2) {
            w(g1, row_starts[m2] + r2) += v1 * col2[r2];
          }
        }
      }
    }
  }
}

// Writes the product rows [rows.start, rows.end()) of vbar * unfolding(local)
// in natural descending layout into dst (the block owned by one destination).
void product_row_block(std::span<const double> local, const LocalLayout& l, const Matrix& vbar,
                       IndexRange rows, double* dst) {
  const std::int64_t len = rows.length;
  for (std::int64_t b = 0; b < l.block_count; ++b) {
    const double* yb = local.data() + b * l.mode_extent * l.block_cols;
    double* zb = dst + b * len * l.block_cols;
    for (std::int64_t rr = 0; rr < len; ++rr) {
      double* zr = zb + rr * l.block_cols;
      for (std::int64_t c = 0; c < l.block_cols; ++c) zr[c] = 0.0;
      for (std::int64_t q = 0; q < l.mode_extent; ++q) {
        const double vq = vbar(rows.start + rr, q);
        if (vq == 0.0) continue;
        const double* yr = yb + q * l.block_cols;
        for (std::int64_t c = 0; c < l.block_cols; ++c) zr[c] += vq * yr[c];
      }
    }
  }
}

Matrix column_block(const Matrix& v, IndexRange cols) {
  Matrix out(v.rows(), cols.length);
  for (std::int64_t r = 0; r < v.rows(); ++r) {
    for (std::int64_t c = 0; c < cols.length; ++c) out(r, c) = v(r, cols.start + c);
  }
  return out;
}

}  // namespace

PackCase pack_case_for(int mode, int order) {
  if (mode == 0) return PackCase::mode0;
  if (mode == order - 1) return PackCase::last_mode;
  return PackCase::middle;
}

PackedBuffer pack_for_all_to_all(const DenseTensor& local, int mode, std::int64_t fiber_size) {
  return pack_all_to_all_impl(local.values(), local.shape().dims(), mode, fiber_size);
}

FiberMatrix unpack_after_all_to_all(std::span<const double> buffer, int mode, int order,
                                    std::span<const std::int64_t> chunk_rows, std::int64_t cols) {
  FiberMatrix out;
  out.cols = cols;
  for (std::int64_t r : chunk_rows) out.rows += r;

  if (chunk_rows.size() == 1 || pack_case_for(mode, order) == PackCase::last_mode) {
    // Either a singleton fiber or the row-major last-mode case: the buffer
    // is already the assembled matrix.
    out.row_major = pack_case_for(mode, order) == PackCase::last_mode && chunk_rows.size() > 1;
    out.unchanged = true;
    out.values.assign(buffer.begin(), buffer.end());
    return out;
  }

  // Collect the per-source chunks of every fiber into contiguous columns.
  out.row_major = false;
  out.values.resize(static_cast<std::size_t>(out.rows * cols));
  std::int64_t source_offset = 0;
  std::int64_t row_start = 0;
  for (std::size_t m = 0; m < chunk_rows.size(); ++m) {
    const std::int64_t rows_m = chunk_rows[m];
    for (std::int64_t c = 0; c < cols; ++c) {
      const double* src = buffer.data() + source_offset + c * rows_m;
      double* dst = out.values.data() + c * out.rows + row_start;
      std::copy(src, src + rows_m, dst);
    }
    source_offset += rows_m * cols;
    row_start += rows_m;
  }
  return out;
}

PackedBuffer pack_for_reduce_scatter(const DenseTensor& local_product, int mode,
                                     std::int64_t fiber_size) {
  const std::vector<std::int64_t>& dims = local_product.shape().dims();
  const int order = static_cast<int>(dims.size());
  const LocalLayout l = local_layout(dims, mode);
  const BlockSplit split(l.mode_extent, fiber_size);
  std::span<const double> data = local_product.values();

  PackedBuffer out;
  out.layout_case = pack_case_for(mode, order);
  out.segment_lengths.resize(static_cast<std::size_t>(fiber_size));
  for (std::int64_t part = 0; part < fiber_size; ++part) {
    out.segment_lengths[static_cast<std::size_t>(part)] = split.length(part) * l.columns;
  }
  out.values.resize(data.size());

  if (fiber_size == 1 || out.layout_case == PackCase::last_mode) {
    // One row-major block: consecutive row ranges are already contiguous.
    std::copy(data.begin(), data.end(), out.values.begin());
    out.identity = true;
    return out;
  }

  // Subblock ℓ gathers its row range from every row-major block; the result
  // is exactly member ℓ's local output tensor in natural descending layout.
  std::int64_t offset = 0;
  for (std::int64_t part = 0; part < fiber_size; ++part) {
    const IndexRange rows = split.range(part);
    for (std::int64_t b = 0; b < l.block_count; ++b) {
      const double* src = data.data() + (b * l.mode_extent + rows.start) * l.block_cols;
      std::copy(src, src + rows.length * l.block_cols, out.values.begin() + offset);
      offset += rows.length * l.block_cols;
    }
  }
  return out;
}

Matrix par_gram_rank(const DenseTensor& local, const BlockMap& map, int mode, RankContext& ctx) {
  const ProcessorGrid& grid = map.grid();
  const std::vector<std::int64_t> coords = grid.coords_of(ctx.rank());
  const Group fiber = fiber_group(grid, mode, coords);
  const std::int64_t p_n = static_cast<std::int64_t>(fiber.size());
  const std::int64_t my_coord = coords[static_cast<std::size_t>(mode)];
  const std::int64_t j_global = map.tensor_dims().extent(mode);

  const std::vector<std::int64_t> dims = map.local_dims(ctx.rank());
  const LocalLayout l = local_layout(dims, mode);
  CostLedger& ledger = ctx.ledger();

  Matrix w(j_global, j_global);
  {
    TempGuard w_guard(ledger, static_cast<double>(j_global * j_global));

    if (p_n == 1) {
      // Singleton fiber: the local unfolding already holds whole fibers.
      if (local.size() > 0) w = gram(local, mode);
      ledger.charge_flops(static_cast<double>(j_global) * static_cast<double>(j_global) *
                          static_cast<double>(l.columns));
    } else {
      const BlockSplit col_split(l.columns, p_n);
      const std::int64_t my_cols = col_split.length(my_coord);

      std::vector<std::int64_t> send_lengths(static_cast<std::size_t>(p_n));
      std::vector<std::int64_t> expected(static_cast<std::size_t>(p_n));
      std::vector<std::int64_t> chunk_rows(static_cast<std::size_t>(p_n));
      for (std::int64_t m = 0; m < p_n; ++m) {
        send_lengths[static_cast<std::size_t>(m)] = col_split.length(m) * l.mode_extent;
        chunk_rows[static_cast<std::size_t>(m)] = map.local_extent(mode, m);
        expected[static_cast<std::size_t>(m)] = chunk_rows[static_cast<std::size_t>(m)] * my_cols;
      }

      const PackCase layout = pack_case_for(mode, map.order());
      std::vector<double> received;
      {
        TempGuard recv_guard(ledger, static_cast<double>(j_global * my_cols));
        if (layout == PackCase::mode0) {
          // No packing: the local array is read in place by the collective.
          received = ctx.all_to_all(fiber, local.values(), send_lengths, expected);
        } else {
          PackedBuffer packed = pack_all_to_all_impl(local.values(), dims, mode, p_n);
          TempGuard send_guard(ledger, static_cast<double>(packed.values.size()));
          received = ctx.all_to_all(fiber, packed.values, send_lengths, expected);
        }

        if (layout == PackCase::last_mode) {
          // Already row-major J x my_cols with rows in global order.
          for (std::int64_t c = 0; c < my_cols; ++c) {
            for (std::int64_t i = 0; i < j_global; ++i) {
              const double vi = received[static_cast<std::size_t>(i * my_cols + c)];
              if (vi == 0.0) continue;
              for (std::int64_t j = i; j < j_global; ++j) {
                w(i, j) += vi * received[static_cast<std::size_t>(j * my_cols + c)];
              }
            }
          }
        } else {
          accumulate_chunked_gram(w, received, chunk_rows, my_cols);
        }
      }
      ledger.charge_flops(static_cast<double>(j_global) * static_cast<double>(j_global) *
                          static_cast<double>(my_cols));
    }

    for (std::int64_t i = 0; i < j_global; ++i) {
      for (std::int64_t j = 0; j < i; ++j) w(i, j) = w(j, i);
    }
  }

  const std::vector<double> s = ctx.all_reduce_sum(all_ranks(ctx.world_size()), w.values());
  Matrix out(j_global, j_global);
  std::copy(s.begin(), s.end(), out.values().begin());
  return out;
}

Matrix par_gram(const DistributedTensor& dist, int mode, VirtualComm& comm) {
  const BlockMap& map = dist.map();
  if (comm.world_size() != map.grid().total_ranks()) {
    throw DimensionError("communicator has " + std::to_string(comm.world_size()) +
                         " ranks but the grid needs " + std::to_string(map.grid().total_ranks()));
  }
  std::vector<Matrix> results(static_cast<std::size_t>(comm.world_size()));
  comm.run([&](RankContext& ctx) {
    results[static_cast<std::size_t>(ctx.rank())] =
        par_gram_rank(dist.local(ctx.rank()), map, mode, ctx);
  });
  for (int r = 1; r < comm.world_size(); ++r) {
    if (!(results[static_cast<std::size_t>(r)] == results[0])) {
      throw NumericalError("distributed gram result differs across ranks");
    }
  }
  return results[0];
}

bool ttm_selects_reduce_scatter(std::int64_t k, std::int64_t j_n, std::int64_t p_n) {
  return k <= j_n / p_n;
}

DenseTensor par_ttm_rank(const DenseTensor& local, const BlockMap& map, int mode, const Matrix& v,
                         RankContext& ctx, TtmVariant variant) {
  const ProcessorGrid& grid = map.grid();
  const std::vector<std::int64_t> coords = grid.coords_of(ctx.rank());
  const Group fiber = fiber_group(grid, mode, coords);
  const std::int64_t p_n = static_cast<std::int64_t>(fiber.size());
  const std::int64_t my_coord = coords[static_cast<std::size_t>(mode)];
  const std::int64_t j_global = map.tensor_dims().extent(mode);
  const std::int64_t k = v.rows();

  if (v.cols() != j_global) {
    throw DimensionError("distributed ttm mode " + std::to_string(mode) + ": matrix has " +
                         std::to_string(v.cols()) + " columns but tensor extent is " +
                         std::to_string(j_global));
  }

  const std::vector<std::int64_t> dims = map.local_dims(ctx.rank());
  const LocalLayout l = local_layout(dims, mode);
  CostLedger& ledger = ctx.ledger();

  // Each rank only needs the columns of v matching its owned mode-n indices.
  const Matrix vbar = column_block(v, map.owned_range(mode, my_coord));

  const BlockSplit k_split(k, p_n);
  const std::int64_t out_extent = k_split.length(my_coord);
  std::vector<std::int64_t> out_dims = dims;
  out_dims[static_cast<std::size_t>(mode)] = out_extent;
  std::int64_t out_size = 1;
  for (std::int64_t d : out_dims) out_size *= d;

  const bool reduce_scatter = variant == TtmVariant::auto_rule
                                  ? ttm_selects_reduce_scatter(k, j_global, p_n)
                                  : variant == TtmVariant::reduce_scatter;

  ledger.charge_flops(2.0 * static_cast<double>(k) * static_cast<double>(l.mode_extent) *
                      static_cast<double>(l.columns));

  std::vector<double> out_values;
  if (reduce_scatter) {
    // Local product written directly in destination-major order: subblock ℓ
    // is the natural-descending block owned by fiber member ℓ.
    std::vector<std::int64_t> partition(static_cast<std::size_t>(p_n));
    for (std::int64_t part = 0; part < p_n; ++part) {
      partition[static_cast<std::size_t>(part)] = k_split.length(part) * l.columns;
    }
    std::vector<double> packed(static_cast<std::size_t>(k * l.columns), 0.0);
    TempGuard packed_guard(ledger, static_cast<double>(packed.size()));
    std::int64_t offset = 0;
    for (std::int64_t part = 0; part < p_n; ++part) {
      const IndexRange rows = k_split.range(part);
      if (l.columns > 0 && rows.length > 0) {
        product_row_block(local.values(), l, vbar, rows, packed.data() + offset);
      }
      offset += rows.length * l.columns;
    }
    out_values = ctx.reduce_scatter_sum(fiber, packed, partition);
  } else {
    // Multiple-reduction: one smaller product and one Reduce per fiber
    // member, rooted at that member.
    for (std::int64_t part = 0; part < p_n; ++part) {
      const IndexRange rows = k_split.range(part);
      std::vector<double> w(static_cast<std::size_t>(rows.length * l.columns), 0.0);
      TempGuard w_guard(ledger, static_cast<double>(w.size()));
      if (l.columns > 0 && rows.length > 0) {
        product_row_block(local.values(), l, vbar, rows, w.data());
      }
      std::vector<double> r =
          ctx.reduce_sum(fiber, w, fiber[static_cast<std::size_t>(part)]);
      if (fiber[static_cast<std::size_t>(part)] == ctx.rank()) out_values = std::move(r);
    }
  }

  if (out_size == 0) return DenseTensor();
  return DenseTensor(Shape(out_dims), std::move(out_values));
}

DistributedTensor par_ttm(const DistributedTensor& dist, int mode, const Matrix& v,
                          VirtualComm& comm, TtmVariant variant) {
  const BlockMap& map = dist.map();
  if (comm.world_size() != map.grid().total_ranks()) {
    throw DimensionError("communicator has " + std::to_string(comm.world_size()) +
                         " ranks but the grid needs " + std::to_string(map.grid().total_ranks()));
  }
  std::vector<DenseTensor> locals(static_cast<std::size_t>(comm.world_size()));
  comm.run([&](RankContext& ctx) {
    locals[static_cast<std::size_t>(ctx.rank())] =
        par_ttm_rank(dist.local(ctx.rank()), map, mode, v, ctx, variant);
  });
  return DistributedTensor(map.with_extent(mode, v.rows()), std::move(locals));
}

double dist_norm_rank(const DenseTensor& local, RankContext& ctx) {
  const double local_sum[1] = {local.sum_squares()};
  const std::vector<double> total = ctx.all_reduce_sum(all_ranks(ctx.world_size()), local_sum);
  return std::sqrt(total[0]);
}

double dist_norm(const DistributedTensor& dist, VirtualComm& comm) {
  std::vector<double> results(static_cast<std::size_t>(comm.world_size()));
  comm.run([&](RankContext& ctx) {
    results[static_cast<std::size_t>(ctx.rank())] = dist_norm_rank(dist.local(ctx.rank()), ctx);
  });
  return results[0];
}

}  // namespace tucker
