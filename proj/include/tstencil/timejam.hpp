#pragma once

// In-place unroll-and-jam of the time loop over the block-transposed
// layout: each VectorSet is advanced k levels between its load and its
// store. One-dimensional stencils only, k in {1, 2}.
//
// A sweep is a sequence of iterations j = 0, 1, ... over the blocks of a
// run. Iteration j loads block j into the newest slot and advances the
// older live sets one level each, newest first; the oldest set reaches
// level k and is stored back. Iterations j < k form the boot phase, the
// iterations after the last load the drain phase.

#include <array>
#include <cstddef>
#include <vector>

#include "tstencil/core.hpp"

namespace tstencil {

/// Vector registers a jam of depth k needs: (vl + 1) per level plus one per
/// weight.
int register_demand(int k, int vl, const StencilSpec& spec);

/// Throws std::invalid_argument (naming the computed demand) unless
/// register_demand(k, vl, spec) <= 4 * vl.
void check_register_budget(int k, int vl, const StencilSpec& spec);

/// Where a jam run reads and writes. Blocks [first_block, last_block) of
/// row (y, z) are loaded from and finally stored to the grid handed to
/// boot(). Neighbour values outside the run at input level L come from
/// edge[L] (nullptr means the grid itself). When `mid` is set, every
/// intermediate level is also stored there.
struct JamBounds {
  std::size_t first_block = 0;
  std::size_t last_block = 0;
  std::ptrdiff_t y = 0;
  std::ptrdiff_t z = 0;
  std::array<const GridBuffer*, 2> edge{nullptr, nullptr};
  GridBuffer* mid = nullptr;
};

enum class JamPhase { boot, pipeline, drain, done };

class JamState {
 public:
  int k() const { return k_; }
  int vl() const { return vl_; }
  /// Next iteration index (block index relative to the run start).
  std::size_t cursor() const { return cursor_; }
  std::size_t block_count() const { return nblocks_; }
  JamPhase phase() const;

  /// Live set in pipeline position i (0 = oldest, k = newest); -1 when empty.
  int level(int i) const { return level_[i]; }
  std::ptrdiff_t block(int i) const { return block_[i]; }
  VectorSet set(int i) const;

  /// Level at which each block of the run was stored (-1: not yet).
  const std::vector<int>& stored_levels() const { return stored_; }
  const Counters& counters() const { return counters_; }

 private:
  friend JamState boot(GridBuffer&, const StencilSpec&, int, const JamBounds*);
  friend struct JamAccess;

  int k_ = 0;
  int vl_ = 0;
  int reach_ = 0;
  GridBuffer* grid_ = nullptr;
  JamBounds bounds_;
  std::ptrdiff_t n_valid_ = 0;
  std::size_t nblocks_ = 0;
  std::size_t cursor_ = 0;
  std::size_t ring_ = 0;
  AlignedVector slots_;  // k+1 VectorSets, ring-indexed
  AlignedVector vrl_;    // k+1 saved right-edge row groups, ring-indexed
  std::vector<int> level_;
  std::vector<std::ptrdiff_t> block_;
  std::vector<int> stored_;
  Counters counters_;
};

/// Runs the boot iterations: loads the first k blocks of the run and
/// advances the set in position i by k-1-i levels. `bounds` defaults to
/// every block of row 0 with halo-backed edges.
JamState boot(GridBuffer& grid, const StencilSpec& spec, int k, const JamBounds* bounds = nullptr);

/// One steady-state iteration: loads the next block, advances every live
/// set one level and stores the set that reached level k. Returns false
/// (doing nothing) once every block has been loaded.
bool pipeline_advance(JamState& state, GridBuffer& grid, const StencilSpec& spec);

/// Epilogue iterations: advances the remaining sets to level k with
/// halo-backed right dependencies and stores them.
void drain(JamState& state, GridBuffer& grid, const StencilSpec& spec);

/// boot + pipeline + drain over `bounds`, adding the meters to `counters`.
void jam_run(GridBuffer& grid, const StencilSpec& spec, int k, const JamBounds& bounds, Counters* counters = nullptr);

/// Advances a 1D block-transposed grid `steps` steps in place, k levels per
/// sweep. steps must be divisible by k.
void jam_sweep(GridBuffer& grid, const StencilSpec& spec, int k, int steps, Counters* counters = nullptr);

}  // namespace tstencil
