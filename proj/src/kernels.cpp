#include "tstencil/kernels.hpp"

#include <algorithm>
#include <stdexcept>

#include "vs_kernel.hpp"

namespace tstencil {

namespace {

struct FlatTap {
  int group;
  int dx;
  double w;
};

std::vector<FlatTap> flat_taps(const std::vector<RowGroup>& groups) {
  std::vector<FlatTap> taps;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (const auto& [dx, w] : groups[g].taps) taps.push_back({static_cast<int>(g), dx, w});
  return taps;
}

void require_vl(int vl) {
  if (vl != 4 && vl != 8) throw std::invalid_argument("vector length must be 4 or 8, got " + std::to_string(vl));
}

void check_pair(const GridBuffer& src, const GridBuffer& dst, const StencilSpec& spec) {
  if (&src == &dst) throw std::invalid_argument("source and destination must be distinct buffers");
  if (!src.same_shape(dst)) throw std::invalid_argument("source and destination grids differ in shape");
  if (!(src.layout() == dst.layout())) throw std::invalid_argument("source and destination layouts differ");
  if (src.dim() != spec.dim) throw std::invalid_argument("grid and stencil dimensions differ");
  if (src.halo()[0] < spec.order) throw std::invalid_argument("grid halo is narrower than the stencil order");
}

void check_layout(const GridBuffer& g, LayoutKind kind, const char* who) {
  if (g.layout().kind != kind) {
    throw std::invalid_argument(std::string(who) + " expects a " + to_string(kind) + " grid, got " +
                                to_string(g.layout()));
  }
}

void check_region(const GridBuffer& g, const Region& r) {
  for (int d = 0; d < 3; ++d) {
    const auto n = static_cast<std::ptrdiff_t>(g.extents()[d]);
    if (r.lo[d] < 0 || r.hi[d] > n || r.lo[d] > r.hi[d]) {
      throw std::out_of_range("region [" + std::to_string(r.lo[d]) + ", " + std::to_string(r.hi[d]) +
                              ") leaves the interior of dimension " + std::to_string(d));
    }
  }
}

template <class F>
void for_each_row(const Region& r, F&& f) {
  for (std::ptrdiff_t z = r.lo[2]; z < r.hi[2]; ++z)
    for (std::ptrdiff_t y = r.lo[1]; y < r.hi[1]; ++y) f(y, z);
}

// Natural layout, one row segment [x0, x1).
void scalar_segment(const std::vector<FlatTap>& taps, const double* const* rows, double* out, std::ptrdiff_t x0,
                    std::ptrdiff_t x1) {
  for (std::ptrdiff_t x = x0; x < x1; ++x) {
    double acc = taps[0].w * rows[taps[0].group][x + taps[0].dx];
    for (std::size_t t = 1; t < taps.size(); ++t) acc += taps[t].w * rows[taps[t].group][x + taps[t].dx];
    out[x] = acc;
  }
}

void gather_rows(const GridBuffer& src, const std::vector<RowGroup>& groups, std::ptrdiff_t y, std::ptrdiff_t z,
                 std::vector<const double*>& rows) {
  rows.resize(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) rows[g] = src.row(y + groups[g].dy, z + groups[g].dz);
}

void count_scalar(Counters& c, std::size_t points, std::size_t taps) {
  c.scalar_loads += points * taps;
  c.scalar_stores += points;
  c.point_updates += points;
}

// ---------------------------------------------------------------------------

template <int VL>
void multiload_region(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, const Region& r,
                      Counters& c) {
  using V = simd::Vec<VL>;
  const detail::CompiledStencil<V> cs(spec);
  const auto taps = flat_taps(cs.groups);
  std::vector<const double*> rows;
  for_each_row(r, [&](std::ptrdiff_t y, std::ptrdiff_t z) {
    gather_rows(src, cs.groups, y, z, rows);
    double* out = dst.row(y, z);
    std::ptrdiff_t x = r.lo[0];
    for (; x + VL <= r.hi[0]; x += VL) {
      __builtin_prefetch(rows[0] + x + detail::kPrefetchAhead);
      __builtin_prefetch(out + x + detail::kPrefetchAhead, 1);
      const auto& t0 = cs.taps[0];
      V acc = simd::mul(t0.w, V::loadu(rows[t0.group] + x + t0.dx));
      for (std::size_t t = 1; t < cs.taps.size(); ++t) {
        const auto& tap = cs.taps[t];
        acc = simd::add(acc, simd::mul(tap.w, V::loadu(rows[tap.group] + x + tap.dx)));
      }
      acc.storeu(out + x);
      c.vector_loads += cs.taps.size();
      c.vector_stores += 1;
      c.point_updates += VL;
    }
    scalar_segment(taps, rows.data(), out, x, r.hi[0]);
    count_scalar(c, static_cast<std::size_t>(r.hi[0] - x), taps.size());
  });
}

// One row of reorg_region for a single row group with taps dx = -R..R.
template <int VL, int R>
void reorg_row_dense(const detail::CompiledStencil<simd::Vec<VL>>& cs, const double* in, double* out,
                     std::ptrdiff_t x0, std::ptrdiff_t nvec) {
  using V = simd::Vec<VL>;
  V w[2 * R + 1];
  for (int t = 0; t <= 2 * R; ++t) w[t] = cs.taps[static_cast<std::size_t>(t)].w;
  std::array<double, VL> lanes{};
  for (int l = VL - R; l < VL; ++l) lanes[l] = in[x0 - VL + l];
  V prev = simd::from_array<V>(lanes);
  V cur = V::loadu(in + x0);
  for (std::ptrdiff_t k = 0; k < nvec; ++k) {
    const std::ptrdiff_t x = x0 + k * VL;
    V next;
    if (k + 1 < nvec) {
      next = V::loadu(in + x + VL);
    } else {
      std::array<double, VL> tail{};
      for (int l = 0; l < R; ++l) tail[l] = in[x + VL + l];
      next = simd::from_array<V>(tail);
    }
    __builtin_prefetch(in + x + detail::kPrefetchAhead);
    __builtin_prefetch(out + x + detail::kPrefetchAhead, 1);
    V acc = simd::mul(w[0], detail::shifted(prev, cur, next, -R));
#pragma GCC unroll 5
    for (int t = 1; t <= 2 * R; ++t) acc = simd::add(acc, simd::mul(w[t], detail::shifted(prev, cur, next, t - R)));
    acc.storeu(out + x);
    prev = cur;
    cur = next;
  }
}

template <int VL>
void reorg_region(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, const Region& r, Counters& c) {
  using V = simd::Vec<VL>;
  const detail::CompiledStencil<V> cs(spec);
  const auto taps = flat_taps(cs.groups);
  const std::size_t ng = cs.groups.size();
  std::vector<const double*> rows;
  std::vector<V> prev(ng), cur(ng), next(ng);
  const std::ptrdiff_t nvec = (r.hi[0] - r.lo[0]) / VL;
  const int dense = detail::is_dense_row(cs, 1) ? 1 : detail::is_dense_row(cs, 2) ? 2 : 0;
  for_each_row(r, [&](std::ptrdiff_t y, std::ptrdiff_t z) {
    gather_rows(src, cs.groups, y, z, rows);
    double* out = dst.row(y, z);
    const std::ptrdiff_t x0 = r.lo[0];
    if (dense && nvec > 0) {
      if (dense == 1) reorg_row_dense<VL, 1>(cs, rows[0], out, x0, nvec);
      else reorg_row_dense<VL, 2>(cs, rows[0], out, x0, nvec);
      const std::uint64_t nv = static_cast<std::uint64_t>(nvec);
      c.vector_loads += nv;
      c.scalar_loads += 2 * static_cast<std::uint64_t>(dense);
      c.reorg_ops += nv * 4 * static_cast<std::uint64_t>(dense);
      c.vector_stores += nv;
      c.point_updates += nv * VL;
      const std::ptrdiff_t tail = x0 + nvec * VL;
      scalar_segment(taps, rows.data(), out, tail, r.hi[0]);
      count_scalar(c, static_cast<std::size_t>(r.hi[0] - tail), taps.size());
      return;
    }
    if (nvec > 0) {
      for (std::size_t g = 0; g < ng; ++g) {
        const int rl = cs.groups[g].reach_left;
        std::array<double, VL> lanes{};
        for (int l = VL - rl; l < VL; ++l) lanes[l] = rows[g][x0 - VL + l];
        prev[g] = simd::from_array<V>(lanes);
        cur[g] = V::loadu(rows[g] + x0);
        c.scalar_loads += static_cast<std::uint64_t>(rl);
        c.vector_loads += 1;
      }
    }
    for (std::ptrdiff_t k = 0; k < nvec; ++k) {
      const std::ptrdiff_t x = x0 + k * VL;
      for (std::size_t g = 0; g < ng; ++g) {
        if (k + 1 < nvec) {
          next[g] = V::loadu(rows[g] + x + VL);
          c.vector_loads += 1;
        } else {
          const int rr = cs.groups[g].reach_right;
          std::array<double, VL> lanes{};
          for (int l = 0; l < rr; ++l) lanes[l] = rows[g][x + VL + l];
          next[g] = simd::from_array<V>(lanes);
          c.scalar_loads += static_cast<std::uint64_t>(rr);
        }
      }
      const auto& t0 = cs.taps[0];
      V acc = simd::mul(t0.w, detail::shifted(prev[t0.group], cur[t0.group], next[t0.group], t0.dx));
      for (std::size_t t = 1; t < cs.taps.size(); ++t) {
        const auto& tap = cs.taps[t];
        acc = simd::add(acc, simd::mul(tap.w, detail::shifted(prev[tap.group], cur[tap.group], next[tap.group], tap.dx)));
      }
      for (const auto& tap : cs.taps)
        if (tap.dx != 0) c.reorg_ops += 2;
      acc.storeu(out + x);
      c.vector_stores += 1;
      c.point_updates += VL;
      std::swap(prev, cur);
      std::swap(cur, next);
    }
    const std::ptrdiff_t tail = x0 + nvec * VL;
    scalar_segment(taps, rows.data(), out, tail, r.hi[0]);
    count_scalar(c, static_cast<std::size_t>(r.hi[0] - tail), taps.size());
  });
}

template <int VL>
void dlt_region(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, const Region& r, Counters& c) {
  using V = simd::Vec<VL>;
  const detail::CompiledStencil<V> cs(spec);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(src.extents()[0]);
  const std::ptrdiff_t m = n / VL;
  if (m < cs.reach) {
    throw std::invalid_argument("DLT needs at least " + std::to_string(cs.reach) + " columns per lane, got " +
                                std::to_string(m));
  }
  std::vector<const double*> rows;
  for_each_row(r, [&](std::ptrdiff_t y, std::ptrdiff_t z) {
    gather_rows(src, cs.groups, y, z, rows);
    double* out = dst.row(y, z);
    auto column = [&](int g, std::ptrdiff_t col) -> V {
      const double* p = rows[g];
      if (col >= 0 && col < m) {
        c.vector_loads += 1;
        return V::load(p + col * VL);
      }
      c.vector_loads += 1;
      c.scalar_loads += 1;
      c.reorg_ops += 2;
      if (col < 0) {
        // Lane q of column m+col holds natural (q+1)*m + col: shift up one
        // lane and take lane 0 from the left halo.
        const V shifted = simd::rotate_right<1>(V::load(p + (m + col) * VL));
        return simd::blend<1u>(shifted, V::broadcast(p[col]));
      }
      const V shifted = simd::rotate_left<1>(V::load(p + (col - m) * VL));
      return simd::blend<1u << (VL - 1)>(shifted, V::broadcast(p[n + col - m]));
    };
    for (std::ptrdiff_t col = 0; col < m; ++col) {
      const auto& t0 = cs.taps[0];
      V acc = simd::mul(t0.w, column(t0.group, col + t0.dx));
      for (std::size_t t = 1; t < cs.taps.size(); ++t) {
        const auto& tap = cs.taps[t];
        acc = simd::add(acc, simd::mul(tap.w, column(tap.group, col + tap.dx)));
      }
      acc.store(out + col * VL);
      c.vector_stores += 1;
      c.point_updates += VL;
    }
  });
}

// transpose_blocks for a single row group with taps dx = -R..R.
template <int VL, int R>
void transpose_blocks_dense(const GridBuffer& src, GridBuffer& dst, const detail::CompiledStencil<simd::Vec<VL>>& cs,
                            const Region& r, std::ptrdiff_t b0, std::ptrdiff_t b1, Counters& c) {
  using V = simd::Vec<VL>;
  constexpr std::ptrdiff_t B = VL * VL;
  const auto& grp = cs.groups[0];
  for_each_row(r, [&](std::ptrdiff_t y, std::ptrdiff_t z) {
    const double* in_row = src.row(y + grp.dy, z + grp.dz);
    double* out_row = dst.row(y, z);
    std::array<V, VL> prev, cur, next, out;
    for (int j = 0; j < VL; ++j) cur[j] = V::load(in_row + b0 * B + j * VL);
    detail::virtual_prev(src, b0 * B, y + grp.dy, z + grp.dz, R, prev.data());
    for (std::ptrdiff_t b = b0; b < b1; ++b) {
      if (b + 1 < b1) {
        for (int j = 0; j < VL; ++j) next[j] = V::load(in_row + (b + 1) * B + j * VL);
      } else {
        detail::virtual_next(src, b * B, y + grp.dy, z + grp.dz, R, next.data());
      }
      __builtin_prefetch(in_row + b * B + detail::kPrefetchAhead);
      __builtin_prefetch(out_row + b * B + detail::kPrefetchAhead, 1);
      detail::GroupInputs<V> in;
      detail::assemble_group(prev.data(), cur.data(), next.data(), R, R, in);
      detail::vs_update_dense<V, R>(cs, in, out.data());
      for (int j = 0; j < VL; ++j) out[j].store(out_row + b * B + j * VL);
      prev = cur;
      cur = next;
    }
  });
  const std::uint64_t rows = static_cast<std::uint64_t>((r.hi[1] - r.lo[1]) * (r.hi[2] - r.lo[2]));
  const std::uint64_t sets = rows * static_cast<std::uint64_t>(b1 - b0);
  c.vector_loads += sets * VL;
  c.scalar_loads += rows * 2 * R;
  c.assembled_vectors += sets * 2 * R;
  c.reorg_ops += sets * 4 * R;
  c.vector_stores += sets * VL;
  c.point_updates += sets * B;
}

// Blocks [b0, b1) of every row in r, all lying inside the interior x range.
template <int VL>
void transpose_blocks(const GridBuffer& src, GridBuffer& dst, const detail::CompiledStencil<simd::Vec<VL>>& cs,
                      const Region& r, std::ptrdiff_t b0, std::ptrdiff_t b1, Counters& c) {
  if (detail::is_dense_row(cs, 1)) return transpose_blocks_dense<VL, 1>(src, dst, cs, r, b0, b1, c);
  if (detail::is_dense_row(cs, 2)) return transpose_blocks_dense<VL, 2>(src, dst, cs, r, b0, b1, c);
  using V = simd::Vec<VL>;
  constexpr std::ptrdiff_t B = VL * VL;
  const std::size_t ng = cs.groups.size();
  using Block = std::array<V, VL>;
  std::vector<std::array<Block, 3>> slots(ng);
  std::vector<detail::GroupInputs<V>> in(ng);
  std::vector<const double*> rows;
  std::array<V, VL> out;
  for_each_row(r, [&](std::ptrdiff_t y, std::ptrdiff_t z) {
    gather_rows(src, cs.groups, y, z, rows);
    double* dst_row = dst.row(y, z);
    int ip = 0, ic = 1, in_ = 2;
    for (std::size_t g = 0; g < ng; ++g) {
      const auto& grp = cs.groups[g];
      for (int j = 0; j < VL; ++j) slots[g][ic][j] = V::load(rows[g] + b0 * B + j * VL);
      detail::virtual_prev(src, b0 * B, y + grp.dy, z + grp.dz, grp.reach_left, slots[g][ip].data());
      c.vector_loads += VL;
      c.scalar_loads += static_cast<std::uint64_t>(grp.reach_left);
    }
    for (std::ptrdiff_t b = b0; b < b1; ++b) {
      for (std::size_t g = 0; g < ng; ++g) {
        const auto& grp = cs.groups[g];
        if (b + 1 < b1) {
          for (int j = 0; j < VL; ++j) slots[g][in_][j] = V::load(rows[g] + (b + 1) * B + j * VL);
          c.vector_loads += VL;
        } else {
          detail::virtual_next(src, b * B, y + grp.dy, z + grp.dz, grp.reach_right, slots[g][in_].data());
          c.scalar_loads += static_cast<std::uint64_t>(grp.reach_right);
        }
        detail::assemble_group(slots[g][ip].data(), slots[g][ic].data(), slots[g][in_].data(), grp.reach_left,
                               grp.reach_right, in[g]);
        c.assembled_vectors += static_cast<std::uint64_t>(grp.reach_left + grp.reach_right);
        c.reorg_ops += 2 * static_cast<std::uint64_t>(grp.reach_left + grp.reach_right);
      }
      detail::vs_update(cs, in.data(), out.data());
      for (int j = 0; j < VL; ++j) out[j].store(dst_row + b * B + j * VL);
      c.vector_stores += VL;
      c.point_updates += B;
      const int old_prev = ip;
      ip = ic;
      ic = in_;
      in_ = old_prev;
    }
  });
}

template <int VL>
void transpose_region(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, const Region& r,
                      Counters& c) {
  constexpr std::ptrdiff_t B = VL * VL;
  const std::ptrdiff_t fb = (r.lo[0] + B - 1) / B;
  const std::ptrdiff_t lb = r.hi[0] / B;
  if (fb >= lb) {
    scalar_region(src, dst, spec, r, &c);
    return;
  }
  const detail::CompiledStencil<simd::Vec<VL>> cs(spec);
  transpose_blocks<VL>(src, dst, cs, r, fb, lb, c);
  Region left = r, right = r;
  left.hi[0] = fb * B;
  right.lo[0] = lb * B;
  if (!left.empty()) scalar_region(src, dst, spec, left, &c);
  if (!right.empty()) scalar_region(src, dst, spec, right, &c);
}

template <int VL>
VectorSet vs_step_impl(const VectorSet& vs, const std::vector<VsRowDeps>& deps, const StencilSpec& spec) {
  using V = simd::Vec<VL>;
  const detail::CompiledStencil<V> cs(spec);
  const std::size_t ng = cs.groups.size();
  std::vector<std::array<V, VL>> cur(ng);
  std::vector<detail::GroupInputs<V>> in(ng);
  auto to_vec = [](const std::vector<double>& lanes) {
    if (lanes.size() != static_cast<std::size_t>(VL)) throw std::invalid_argument("vs_step: wrong vector length");
    std::array<double, VL> a{};
    std::copy(lanes.begin(), lanes.end(), a.begin());
    return simd::from_array<V>(a);
  };
  for (std::size_t g = 0; g < ng; ++g) {
    const auto& grp = cs.groups[g];
    auto it = std::find_if(deps.begin(), deps.end(),
                           [&](const VsRowDeps& d) { return d.dy == grp.dy && d.dz == grp.dz; });
    if (it == deps.end()) {
      if (grp.dy != 0 || grp.dz != 0 || grp.reach_left > 0 || grp.reach_right > 0) {
        throw std::invalid_argument("vs_step: missing dependencies for row offset (" + std::to_string(grp.dy) +
                                    ", " + std::to_string(grp.dz) + ")");
      }
    }
    const VectorSet& rows = (it == deps.end() || it->rows.rows.empty()) ? vs : it->rows;
    if (rows.vl != VL || rows.rows.size() != static_cast<std::size_t>(VL * VL)) {
      throw std::invalid_argument("vs_step: dependency vector set has the wrong size");
    }
    if (grp.dy != 0 || grp.dz != 0) {
      if (it->rows.rows.empty()) throw std::invalid_argument("vs_step: cross-row group needs its vector set");
    }
    for (int j = 0; j < VL; ++j) cur[g][j] = to_vec(rows.row(j));
    in[g].cur = cur[g].data();
    const std::size_t nl = it == deps.end() ? 0 : it->left.size();
    const std::size_t nr = it == deps.end() ? 0 : it->right.size();
    if (nl < static_cast<std::size_t>(grp.reach_left) || nr < static_cast<std::size_t>(grp.reach_right)) {
      throw std::invalid_argument("vs_step: missing assembled neighbour vector for row offset (" +
                                  std::to_string(grp.dy) + ", " + std::to_string(grp.dz) + ")");
    }
    for (int i = 0; i < grp.reach_left; ++i) in[g].left[i] = to_vec(it->left[i]);
    for (int i = 0; i < grp.reach_right; ++i) in[g].right[i] = to_vec(it->right[i]);
  }
  std::array<V, VL> out;
  detail::vs_update(cs, in.data(), out.data());
  VectorSet res(VL, vs.base);
  for (int j = 0; j < VL; ++j)
    for (int l = 0; l < VL; ++l) res.at(j, l) = out[j].get(l);
  return res;
}

template <int VL>
std::vector<VsRowDeps> gather_impl(const GridBuffer& grid, const StencilSpec& spec, std::size_t block,
                                   std::ptrdiff_t y, std::ptrdiff_t z) {
  using V = simd::Vec<VL>;
  constexpr std::ptrdiff_t B = VL * VL;
  const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(block) * B;
  const std::size_t nblocks = grid.padded_x() / static_cast<std::size_t>(B);
  std::vector<VsRowDeps> deps;
  for (const RowGroup& grp : row_groups(spec)) {
    VsRowDeps d;
    d.dy = grp.dy;
    d.dz = grp.dz;
    const std::ptrdiff_t yy = y + grp.dy, zz = z + grp.dz;
    d.rows = load_vector_set(grid, block, yy, zz);
    std::array<V, VL> prev, cur, next;
    for (int j = 0; j < VL; ++j) cur[j] = V::loadu(d.rows.rows.data() + j * VL);
    if (block > 0) {
      const VectorSet p = load_vector_set(grid, block - 1, yy, zz);
      for (int j = 0; j < VL; ++j) prev[j] = V::loadu(p.rows.data() + j * VL);
    } else {
      detail::virtual_prev(grid, base, yy, zz, grp.reach_left, prev.data());
    }
    if (block + 1 < nblocks) {
      const VectorSet nx = load_vector_set(grid, block + 1, yy, zz);
      for (int j = 0; j < VL; ++j) next[j] = V::loadu(nx.rows.data() + j * VL);
    } else {
      detail::virtual_next(grid, base, yy, zz, grp.reach_right, next.data());
    }
    detail::GroupInputs<V> gi;
    detail::assemble_group(prev.data(), cur.data(), next.data(), grp.reach_left, grp.reach_right, gi);
    auto lanes = [](V v) {
      const auto a = simd::to_array(v);
      return std::vector<double>(a.begin(), a.end());
    };
    for (int i = 0; i < grp.reach_left; ++i) d.left.push_back(lanes(gi.left[i]));
    for (int i = 0; i < grp.reach_right; ++i) d.right.push_back(lanes(gi.right[i]));
    deps.push_back(std::move(d));
  }
  return deps;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::scalar: return "scalar";
    case Method::multiload: return "multiload";
    case Method::reorg: return "reorg";
    case Method::dlt: return "dlt";
    case Method::transpose: return "transpose";
  }
  return "?";
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"scalar", "multiload", "reorg", "dlt", "transpose"};
  return names;
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::scalar, Method::multiload, Method::reorg, Method::dlt, Method::transpose})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

Layout layout_for(Method m, int vl) {
  switch (m) {
    case Method::dlt: return Layout::dlt(vl);
    case Method::transpose: return Layout::block_transpose(vl);
    default: return Layout::natural();
  }
}

std::size_t Region::points() const {
  if (empty()) return 0;
  std::size_t p = 1;
  for (int d = 0; d < 3; ++d) p *= static_cast<std::size_t>(hi[d] - lo[d]);
  return p;
}

bool Region::empty() const {
  for (int d = 0; d < 3; ++d)
    if (hi[d] <= lo[d]) return true;
  return false;
}

Region interior_region(const GridBuffer& grid) {
  Region r;
  for (int d = 0; d < 3; ++d) r.hi[d] = static_cast<std::ptrdiff_t>(grid.extents()[d]);
  return r;
}

void scalar_region(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, const Region& r,
                   Counters* counters) {
  check_pair(src, dst, spec);
  check_region(src, r);
  if (r.empty()) return;
  const auto groups = row_groups(spec);
  const auto taps = flat_taps(groups);
  Counters c;
  if (src.layout().kind == LayoutKind::natural) {
    std::vector<const double*> rows;
    for_each_row(r, [&](std::ptrdiff_t y, std::ptrdiff_t z) {
      gather_rows(src, groups, y, z, rows);
      scalar_segment(taps, rows.data(), dst.row(y, z), r.lo[0], r.hi[0]);
    });
  } else {
    for_each_row(r, [&](std::ptrdiff_t y, std::ptrdiff_t z) {
      for (std::ptrdiff_t x = r.lo[0]; x < r.hi[0]; ++x) {
        const Tap& t0 = spec.weights[0];
        double acc = t0.weight * src.get(x + t0.offset[0], y + t0.offset[1], z + t0.offset[2]);
        for (std::size_t t = 1; t < spec.weights.size(); ++t) {
          const Tap& tap = spec.weights[t];
          acc += tap.weight * src.get(x + tap.offset[0], y + tap.offset[1], z + tap.offset[2]);
        }
        dst.set(x, y, z, acc);
      }
    });
  }
  count_scalar(c, r.points(), taps.size());
  if (counters) *counters += c;
}

void step_region(Method m, int vl, const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec,
                 const Region& region, Counters* counters) {
  require_vl(vl);
  check_pair(src, dst, spec);
  check_region(src, region);
  if (spec.order > kMaxOrder) throw std::invalid_argument("stencil order exceeds the vector kernels' limit");
  Counters c;
  switch (m) {
    case Method::scalar:
      scalar_region(src, dst, spec, region, &c);
      break;
    case Method::multiload:
      check_layout(src, LayoutKind::natural, "multiload");
      if (!region.empty()) {
        if (vl == 4) multiload_region<4>(src, dst, spec, region, c);
        else multiload_region<8>(src, dst, spec, region, c);
      }
      break;
    case Method::reorg:
      check_layout(src, LayoutKind::natural, "reorg");
      if (!region.empty()) {
        if (vl == 4) reorg_region<4>(src, dst, spec, region, c);
        else reorg_region<8>(src, dst, spec, region, c);
      }
      break;
    case Method::dlt:
      check_layout(src, LayoutKind::dlt, "dlt");
      if (src.layout().vl != vl) throw std::invalid_argument("dlt grid was built for another vector length");
      if (region.lo[0] != 0 || region.hi[0] != static_cast<std::ptrdiff_t>(src.extents()[0])) {
        throw std::invalid_argument("dlt sweeps must cover the whole unit-stride extent");
      }
      if (!region.empty()) {
        if (vl == 4) dlt_region<4>(src, dst, spec, region, c);
        else dlt_region<8>(src, dst, spec, region, c);
      }
      break;
    case Method::transpose:
      check_layout(src, LayoutKind::block_transpose, "transpose");
      if (src.layout().vl != vl) throw std::invalid_argument("transposed grid was built for another vector length");
      if (!region.empty()) {
        if (vl == 4) transpose_region<4>(src, dst, spec, region, c);
        else transpose_region<8>(src, dst, spec, region, c);
      }
      break;
  }
  if (counters) *counters += c;
}

void run_step(Method m, int vl, const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec,
              Counters* counters) {
  require_vl(vl);
  check_pair(src, dst, spec);
  const Layout want = layout_for(m, vl);
  if (!(src.layout() == want)) {
    throw std::invalid_argument(to_string(m) + " expects a " + to_string(want) + " grid, got " +
                                to_string(src.layout()));
  }
  copy_boundary(src, dst);
  step_region(m, vl, src, dst, spec, interior_region(src), counters);
}

void scalar_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, Counters* counters) {
  check_pair(src, dst, spec);
  check_layout(src, LayoutKind::natural, "scalar_step");
  copy_boundary(src, dst);
  scalar_region(src, dst, spec, interior_region(src), counters);
}

void multiload_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, int vl, Counters* counters) {
  run_step(Method::multiload, vl, src, dst, spec, counters);
}

void reorg_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, int vl, Counters* counters) {
  run_step(Method::reorg, vl, src, dst, spec, counters);
}

void dlt_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, Counters* counters) {
  check_layout(src, LayoutKind::dlt, "dlt_step");
  run_step(Method::dlt, src.layout().vl, src, dst, spec, counters);
}

void transpose_layout_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, Counters* counters) {
  check_layout(src, LayoutKind::block_transpose, "transpose_layout_step");
  run_step(Method::transpose, src.layout().vl, src, dst, spec, counters);
}

VectorSet vs_step(const VectorSet& vs, const std::vector<VsRowDeps>& deps, const StencilSpec& spec) {
  if (spec.order > kMaxOrder) throw std::invalid_argument("stencil order exceeds the vector kernels' limit");
  if (vs.vl == 4) return vs_step_impl<4>(vs, deps, spec);
  if (vs.vl == 8) return vs_step_impl<8>(vs, deps, spec);
  throw std::invalid_argument("vs_step: vector length must be 4 or 8");
}

std::vector<VsRowDeps> gather_vs_deps(const GridBuffer& grid, const StencilSpec& spec, std::size_t block,
                                      std::ptrdiff_t y, std::ptrdiff_t z) {
  check_layout(grid, LayoutKind::block_transpose, "gather_vs_deps");
  if (grid.layout().vl == 4) return gather_impl<4>(grid, spec, block, y, z);
  return gather_impl<8>(grid, spec, block, y, z);
}

}  // namespace tstencil
