#pragma once

// Register-level building blocks shared by the sweeps, the jam pipeline
// and the tile runner.

#include <array>
#include <vector>

#include "tstencil/core.hpp"
#include "tstencil/kernels.hpp"
#include "tstencil/simd.hpp"

namespace tstencil::detail {

/// Doubles ahead of the current position that streaming sweeps prefetch.
inline constexpr std::ptrdiff_t kPrefetchAhead = 256;

template <class V>
struct CompiledTap {
  int group;
  int dx;
  V w;
};

/// Weights broadcast once, taps tagged with their row group.
template <class V>
struct CompiledStencil {
  std::vector<RowGroup> groups;
  std::vector<CompiledTap<V>> taps;
  int reach = 0;

  explicit CompiledStencil(const StencilSpec& spec) : groups(row_groups(spec)) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (const auto& [dx, w] : groups[g].taps) taps.push_back({static_cast<int>(g), dx, V::broadcast(w)});
      reach = std::max({reach, groups[g].reach_left, groups[g].reach_right});
    }
  }
};

/// One row group as seen by a VectorSet update: its vl rows plus the
/// assembled vectors standing for rows -1, -2 (left) and vl, vl+1 (right).
template <class V>
struct GroupInputs {
  const V* cur = nullptr;
  std::array<V, kMaxOrder> left;
  std::array<V, kMaxOrder> right;
};

template <class V>
inline V pick_row(const GroupInputs<V>& g, int q) {
  constexpr int vl = V::lanes;
  if (q < 0) return g.left[-q - 1];
  if (q >= vl) return g.right[q - vl];
  return g.cur[q];
}

/// out[j] = sum over taps of w * row(j + dx), in tap order.
template <class V>
inline void vs_update(const CompiledStencil<V>& cs, const GroupInputs<V>* in, V* out) {
  constexpr int vl = V::lanes;
  for (int j = 0; j < vl; ++j) {
    const auto& t0 = cs.taps[0];
    V acc = simd::mul(t0.w, pick_row(in[t0.group], j + t0.dx));
    for (std::size_t t = 1; t < cs.taps.size(); ++t) {
      const auto& tap = cs.taps[t];
      acc = simd::add(acc, simd::mul(tap.w, pick_row(in[tap.group], j + tap.dx)));
    }
    out[j] = acc;
  }
}

/// Whether the stencil is one row group with taps dx = -R..R in order, the
/// shape vs_update_dense handles.
template <class V>
inline bool is_dense_row(const CompiledStencil<V>& cs, int R) {
  if (cs.groups.size() != 1 || cs.taps.size() != static_cast<std::size_t>(2 * R + 1)) return false;
  for (int t = 0; t <= 2 * R; ++t)
    if (cs.taps[static_cast<std::size_t>(t)].dx != t - R) return false;
  return cs.groups[0].reach_left == R && cs.groups[0].reach_right == R;
}

/// vs_update with the tap offsets known at compile time.
template <class V, int R>
inline void vs_update_dense(const CompiledStencil<V>& cs, const GroupInputs<V>& in, V* out) {
  constexpr int vl = V::lanes;
  V w[2 * R + 1];
  for (int t = 0; t <= 2 * R; ++t) w[t] = cs.taps[static_cast<std::size_t>(t)].w;
#pragma GCC unroll 8
  for (int j = 0; j < vl; ++j) {
    V acc = simd::mul(w[0], pick_row(in, j - R));
#pragma GCC unroll 5
    for (int t = 1; t <= 2 * R; ++t) acc = simd::add(acc, simd::mul(w[t], pick_row(in, j + t - R)));
    out[j] = acc;
  }
}

/// Fills the assembled neighbour vectors of one group. prev/next need only
/// their last reach_left and first reach_right rows.
template <class V>
inline void assemble_group(const V* prev, const V* cur, const V* next, int reach_left, int reach_right,
                           GroupInputs<V>& g) {
  constexpr int vl = V::lanes;
  g.cur = cur;
  for (int i = 0; i < reach_left; ++i) g.left[i] = assemble_left(prev[vl - 1 - i], cur[vl - 1 - i]);
  for (int i = 0; i < reach_right; ++i) g.right[i] = assemble_right(cur[i], next[i]);
}

/// Stand-ins for the neighbouring VectorSets at a run end. Lane vl-1 of
/// prev row vl-1-i must hold natural x = base-1-i; lane 0 of next row i must
/// hold natural base+vl*vl+i. Values are broadcast since only that lane is read.
template <class V>
inline void virtual_prev(const GridBuffer& g, std::ptrdiff_t base, std::ptrdiff_t y, std::ptrdiff_t z, int reach,
                         V* prev) {
  constexpr int vl = V::lanes;
  for (int i = 0; i < reach; ++i) prev[vl - 1 - i] = V::broadcast(g.get(base - 1 - i, y, z));
}

template <class V>
inline void virtual_next(const GridBuffer& g, std::ptrdiff_t base, std::ptrdiff_t y, std::ptrdiff_t z, int reach,
                         V* next) {
  constexpr int vl = V::lanes;
  for (int i = 0; i < reach; ++i) next[i] = V::broadcast(g.get(base + vl * vl + i, y, z));
}

/// Natural-layout neighbour at offset dx (|dx| <= 2) from three adjacent
/// vectors: two register ops each way.
template <class V>
inline V shifted(V prev, V cur, V next, int dx) {
  constexpr int vl = V::lanes;
  switch (dx) {
    case -2: return simd::rotate_right<2>(simd::blend<3u << (vl - 2)>(cur, prev));
    case -1: return simd::rotate_right<1>(simd::blend<1u << (vl - 1)>(cur, prev));
    case 1: return simd::rotate_left<1>(simd::blend<1u>(cur, next));
    case 2: return simd::rotate_left<2>(simd::blend<3u>(cur, next));
    default: return cur;
  }
}

}  // namespace tstencil::detail
