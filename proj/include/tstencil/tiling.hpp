#pragma once

// Tessellating space-time tiles for temporal blocking, their validation by
// simulation, and the parallel tile runner.
//
// In one dimension the axis is cut into blocks of width B. A shrinking tile
// on [a, a+B) updates [a + r*t, a + B - r*t + 1) at step t = 1..T_b; an
// expanding tile centred on a block boundary c updates [c - r*t + 1, c + r*t).
// For every t the two kinds partition the axis, so running all shrinking
// tiles and then all expanding tiles advances every point T_b levels.
// In d dimensions a tile is a product of per-dimension kinds and stage s
// holds the tiles that expand in exactly s dimensions (d + 1 stages).
//
// Level L of the grid lives in buffer L % 2 while a schedule runs.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "tstencil/core.hpp"
#include "tstencil/kernels.hpp"

namespace tstencil {

enum class TileKind { shrink, expand, full };

std::string to_string(TileKind kind);

struct Tile {
  int stage = 0;
  std::array<TileKind, 3> kind{TileKind::full, TileKind::full, TileKind::full};
  /// Block start (shrink, full) or centre (expand) per dimension.
  std::array<std::ptrdiff_t, 3> anchor{0, 0, 0};
  Extents extent{1, 1, 1};  // interior extent per dimension
  std::ptrdiff_t block = 1;
  int order = 1;
  int height = 1;  // steps per tile

  /// Points updated at step t (1-based), clipped to the interior.
  Region region_at(int step) const;
  /// Cells a dimension gains (+r), loses (-r) or keeps (0) per side per step.
  std::array<int, 3> growth() const;
};

struct TileSchedule {
  int dim = 1;
  int order = 1;
  int height = 1;            // T_b
  std::ptrdiff_t block = 1;  // B, the same in every tiled dimension
  Extents extents{1, 1, 1};
  bool spatial = false;  // plain blocking, one step per cycle
  std::vector<std::vector<Tile>> stages;
  std::vector<std::string> notes;

  std::size_t tile_count() const;
};

/// Shrinking triangles then expanding inverted triangles. Requires B | n,
/// B >= 2*r*T_b and T_b >= 0.
TileSchedule build_tessellation_1d(std::size_t n, std::ptrdiff_t block, int height, int order);

/// Three stages: no, one or two expanding dimensions.
TileSchedule build_tessellation_2d(const Extents& n, std::ptrdiff_t block, int height, int order);

/// Any dimension count: d + 1 stages.
TileSchedule build_tessellation(int dim, const Extents& n, std::ptrdiff_t block, int height, int order);

/// Plain boxes of side `block` (clipped at the far edges), one step, one stage.
TileSchedule build_spatial_blocking(int dim, const Extents& n, std::ptrdiff_t block, int order);

/// Level reached by every interior point after simulating the first
/// `stages` stages (all when negative), x fastest.
struct CountMap {
  Extents extents{1, 1, 1};
  std::vector<int> counts;

  int at(std::ptrdiff_t x, std::ptrdiff_t y = 0, std::ptrdiff_t z = 0) const {
    return counts[static_cast<std::size_t>((z * static_cast<std::ptrdiff_t>(extents[1]) + y) *
                                               static_cast<std::ptrdiff_t>(extents[0]) +
                                           x)];
  }
};

/// Simulates the schedule and throws std::logic_error naming the point when
/// a (point, level) is updated twice or out of order, when a read finds a
/// neighbour whose needed level was already overwritten, or when two tiles
/// of one stage conflict on a (cell, buffer) pair.
CountMap update_count_map(const TileSchedule& schedule, int stages = -1);

struct TiledRunOptions {
  Method method = Method::transpose;
  int vl = 4;
  int jam_k = 1;
  int workers = 1;
};

/// Per stage: tile count, one sample tile, and any notes. With `run`, also
/// reports where a jam depth of 2 falls back to single steps.
std::string dump_schedule(const TileSchedule& schedule, const TiledRunOptions* run = nullptr);

/// Updates the points of the tile's step-`step` region that lie in vl*vl
/// blocks only partly covered by it. The cells those points read are
/// gathered through the layout map into a natural-order row, updated there,
/// and scattered back; only the tile's own cells are read or written, so
/// tiles sharing a block can run concurrently.
void boundary_vs_pass(const Tile& tile, const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, int step,
                      Counters* counters = nullptr);

/// A block that one of the tile's x edges cuts strictly inside for steps
/// [first_step, last_step]. Edges lying on the axis ends are not counted.
struct StraddleRun {
  std::ptrdiff_t block = 0;
  int first_step = 0;
  int last_step = 0;
  int length() const { return last_step - first_step + 1; }
};

std::vector<StraddleRun> straddle_runs(const Tile& tile, int vl);

/// Advances `grid` `steps` steps by running the schedule's stage cycle
/// steps / T_b times (a final shorter cycle covers the remainder). Stages
/// run in order with a barrier between them; the tiles of a stage are
/// dealt round-robin to `workers` threads. Results do not depend on the
/// worker count.
void run_tiled(GridBuffer& grid, const StencilSpec& spec, const TileSchedule& schedule, int steps,
               const TiledRunOptions& options, Counters* counters = nullptr);

}  // namespace tstencil
