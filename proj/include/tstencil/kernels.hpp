#pragma once

// One-time-step sweeps. Every method reads `src` and writes `dst` (distinct
// buffers) and accumulates the taps of a point in the stencil's weight
// order with a rounded product then a rounded add, so all methods produce
// bit-identical results to the scalar loop.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tstencil/core.hpp"
#include "tstencil/simd.hpp"

namespace tstencil {

enum class Method { scalar, multiload, reorg, dlt, transpose };

std::string to_string(Method m);
Method parse_method(std::string_view name);
const std::vector<std::string>& method_names();

/// Storage layout a method operates on.
Layout layout_for(Method m, int vl);

/// Half-open box of interior points, natural coordinates.
struct Region {
  std::array<std::ptrdiff_t, 3> lo{0, 0, 0};
  std::array<std::ptrdiff_t, 3> hi{0, 0, 0};

  std::size_t points() const;
  bool empty() const;
};

/// The whole interior of `grid`.
Region interior_region(const GridBuffer& grid);

// Full sweeps. Each updates every interior point and copies halo and
// padding cells from src to dst.

void scalar_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, Counters* counters = nullptr);
void multiload_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, int vl,
                    Counters* counters = nullptr);
void reorg_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, int vl,
                Counters* counters = nullptr);
void dlt_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, Counters* counters = nullptr);
void transpose_layout_step(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec,
                           Counters* counters = nullptr);

/// Dispatches a full sweep by method.
void run_step(Method m, int vl, const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec,
              Counters* counters = nullptr);

/// Updates only the points of `region`; nothing else in dst is touched.
/// DLT regions must span the whole unit-stride extent. Transpose regions
/// vectorise the vl*vl blocks lying fully inside the x range and compute
/// the straddled parts point by point.
void step_region(Method m, int vl, const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec,
                 const Region& region, Counters* counters = nullptr);

/// Point-by-point update of `region` through the layout map; works on any
/// layout.
void scalar_region(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, const Region& region,
                   Counters* counters = nullptr);

// ---------------------------------------------------------------------------
// Vector-set primitives
// ---------------------------------------------------------------------------

/// Left neighbour of row 0 from the last rows of the previous and the
/// current VectorSet: (W X Y Z), (D H L P) -> (Z D H L).
template <class V>
inline V assemble_left(V prev_last, V cur_last) {
  constexpr int vl = V::lanes;
  return simd::rotate_right<1>(simd::blend<1u << (vl - 1)>(cur_last, prev_last));
}

/// Right neighbour of the last row from the first rows of the current and
/// the next VectorSet: (A E I M), (Q U Y c) -> (E I M Q).
template <class V>
inline V assemble_right(V cur_first, V next_first) {
  return simd::rotate_left<1>(simd::blend<1u>(cur_first, next_first));
}

/// Inputs of one row group (taps sharing dy, dz) for vs_step: the VectorSet
/// at the same x position in row (y+dy, z+dz) and its assembled neighbour
/// vectors. left[i] stands for row -(i+1), right[i] for row vl+i.
struct VsRowDeps {
  int dy = 0;
  int dz = 0;
  VectorSet rows;
  std::vector<std::vector<double>> left;
  std::vector<std::vector<double>> right;
};

/// Advances `vs` one step. `deps` must cover every row group of the stencil;
/// the (0, 0) group may leave `rows` empty to mean `vs` itself. Throws
/// std::invalid_argument when a group or neighbour vector is missing.
VectorSet vs_step(const VectorSet& vs, const std::vector<VsRowDeps>& deps, const StencilSpec& spec);

/// Builds the dependencies of block `block` of row (y, z) of a
/// BlockTranspose grid, assembling neighbour vectors from the adjacent
/// blocks (or from the halo at the row ends).
std::vector<VsRowDeps> gather_vs_deps(const GridBuffer& grid, const StencilSpec& spec, std::size_t block,
                                      std::ptrdiff_t y = 0, std::ptrdiff_t z = 0);

}  // namespace tstencil
