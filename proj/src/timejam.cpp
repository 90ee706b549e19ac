#include "tstencil/timejam.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "tstencil/simd.hpp"
#include "vs_kernel.hpp"

namespace tstencil {

int register_demand(int k, int vl, const StencilSpec& spec) {
  return k * (vl + 1) + static_cast<int>(spec.weights.size());
}

void check_register_budget(int k, int vl, const StencilSpec& spec) {
  const int demand = register_demand(k, vl, spec);
  if (demand > 4 * vl) {
    throw std::invalid_argument("register budget exceeded: k*(vl+1) + weights = " + std::to_string(k) + "*" +
                                std::to_string(vl + 1) + " + " + std::to_string(spec.weights.size()) + " = " +
                                std::to_string(demand) + " > " + std::to_string(4 * vl));
  }
}

JamPhase JamState::phase() const {
  if (cursor_ < static_cast<std::size_t>(k_)) return JamPhase::boot;
  if (cursor_ < nblocks_) return JamPhase::pipeline;
  if (cursor_ < nblocks_ + static_cast<std::size_t>(k_)) return JamPhase::drain;
  return JamPhase::done;
}

VectorSet JamState::set(int i) const {
  const std::size_t bs = static_cast<std::size_t>(vl_ * vl_);
  const std::ptrdiff_t b = block_[i];
  VectorSet vs(vl_, b < 0 ? 0 : (bounds_.first_block + static_cast<std::size_t>(b)) * bs);
  const double* s = slots_.data() + ((ring_ + static_cast<std::size_t>(i)) % static_cast<std::size_t>(k_ + 1)) * bs;
  std::copy(s, s + bs, vs.rows.begin());
  return vs;
}

struct JamAccess {
  template <int VL>
  static void iterate(JamState& st, const detail::CompiledStencil<simd::Vec<VL>>& cs) {
    using V = simd::Vec<VL>;
    constexpr std::ptrdiff_t B = VL * VL;
    const int k = st.k_;
    const int rl = cs.groups[0].reach_left, rr = cs.groups[0].reach_right;
    const std::size_t ring = static_cast<std::size_t>(k + 1);
    auto slot = [&](int i) { return st.slots_.data() + ((st.ring_ + static_cast<std::size_t>(i)) % ring) * B; };
    auto vrl = [&](int i) {
      return st.vrl_.data() + ((st.ring_ + static_cast<std::size_t>(i)) % ring) * (kMaxOrder * VL);
    };
    GridBuffer& g = *st.grid_;
    const JamBounds& bd = st.bounds_;
    double* row = g.row(bd.y, bd.z);
    auto base_of = [&](std::size_t b) { return static_cast<std::ptrdiff_t>(bd.first_block + b) * B; };
    const std::size_t j = st.cursor_;
    Counters& c = st.counters_;

    if (j < st.nblocks_) {
      const std::ptrdiff_t base = base_of(j);
      std::copy(row + base, row + base + B, slot(k));
      st.level_[k] = 0;
      st.block_[k] = static_cast<std::ptrdiff_t>(j);
      c.vs_loads += 1;
      c.vector_loads += VL;
    } else {
      st.level_[k] = -1;
      st.block_[k] = -1;
    }

    std::array<V, VL> prev, cur, next, out;
    for (int i = k - 1; i >= 0; --i) {
      if (st.block_[i] < 0) continue;
      const std::size_t b = static_cast<std::size_t>(st.block_[i]);
      const int level = st.level_[i];
      if (level != k - 1 - i) throw std::logic_error("jam pipeline out of step: slot level mismatch");
      const GridBuffer& edge = bd.edge[level] ? *bd.edge[level] : g;
      const std::ptrdiff_t base = base_of(b);
      double* s = slot(i);
      for (int q = 0; q < VL; ++q) cur[q] = V::load(s + q * VL);
      if (b == 0) {
        detail::virtual_prev(edge, base, bd.y, bd.z, rl, prev.data());
        c.scalar_loads += static_cast<std::uint64_t>(rl);
      } else {
        for (int q = 0; q < rl; ++q) prev[VL - 1 - q] = V::load(vrl(i) + q * VL);
      }
      // This set's pre-update right edge is the left dependency of its
      // right neighbour at the same level, one iteration later.
      for (int q = 0; q < rl; ++q) cur[VL - 1 - q].store(vrl(i + 1) + q * VL);
      if (b + 1 >= st.nblocks_) {
        detail::virtual_next(edge, base, bd.y, bd.z, rr, next.data());
        c.scalar_loads += static_cast<std::uint64_t>(rr);
      } else {
        const double* sn = slot(i + 1);
        for (int q = 0; q < rr; ++q) next[q] = V::load(sn + q * VL);
      }
      detail::GroupInputs<V> in;
      detail::assemble_group(prev.data(), cur.data(), next.data(), rl, rr, in);
      detail::vs_update(cs, &in, out.data());
      for (int q = 0; q < VL; ++q) out[q].store(s + q * VL);
      c.assembled_vectors += static_cast<std::uint64_t>(rl + rr);
      c.reorg_ops += 2 * static_cast<std::uint64_t>(rl + rr);

      // Padding cells hold boundary values at every level; the grid still
      // has them since this block is stored only after its last update.
      std::ptrdiff_t valid = B;
      if (base + B > st.n_valid_) {
        valid = std::max<std::ptrdiff_t>(0, st.n_valid_ - base);
        for (std::ptrdiff_t x = std::max(base, st.n_valid_); x < base + B; ++x) {
          const std::ptrdiff_t p = g.position(x);
          s[p - base] = row[p];
        }
      }
      c.point_updates += static_cast<std::uint64_t>(valid);
      st.level_[i] = level + 1;
      if (bd.mid && level + 1 < k) {
        std::copy(s, s + B, bd.mid->row(bd.y, bd.z) + base);
        c.vector_stores += VL;
      }
    }

    if (st.block_[0] >= 0 && st.level_[0] == k) {
      const std::size_t b = static_cast<std::size_t>(st.block_[0]);
      const double* s = slot(0);
      std::copy(s, s + B, row + base_of(b));
      st.stored_[b] = k;
      c.vs_stores += 1;
      c.vector_stores += VL;
    }

    st.ring_ = (st.ring_ + 1) % ring;
    for (int i = 0; i < k; ++i) {
      st.level_[i] = st.level_[i + 1];
      st.block_[i] = st.block_[i + 1];
    }
    st.level_[k] = -1;
    st.block_[k] = -1;
    ++st.cursor_;
  }

  // Iterates until the cursor reaches `until`.
  template <int VL>
  static void run(JamState& st, const StencilSpec& spec, std::size_t until) {
    const detail::CompiledStencil<simd::Vec<VL>> cs(spec);
    while (st.cursor_ < until) iterate<VL>(st, cs);
  }

  static void run_until(JamState& st, const StencilSpec& spec, std::size_t until) {
    if (st.vl_ == 4) run<4>(st, spec, until);
    else run<8>(st, spec, until);
  }

  static void check_grid(const JamState& st, const GridBuffer& grid) {
    if (st.grid_ != &grid) throw std::invalid_argument("jam state belongs to a different grid");
  }

  static std::size_t end_cursor(const JamState& st) { return st.nblocks_ + static_cast<std::size_t>(st.k_); }
  static std::size_t block_count(const JamState& st) { return st.nblocks_; }
};

JamState boot(GridBuffer& grid, const StencilSpec& spec, int k, const JamBounds* bounds) {
  if (grid.layout().kind != LayoutKind::block_transpose) {
    throw std::invalid_argument("time jam needs a block_transpose grid, got " + to_string(grid.layout()));
  }
  if (spec.dim != 1 || grid.dim() != 1) throw std::invalid_argument("time jam supports one-dimensional stencils only");
  const int vl = grid.layout().vl;
  if (k < 1) throw std::invalid_argument("jam depth k must be positive");
  check_register_budget(k, vl, spec);
  if (k > 2) throw std::invalid_argument("jam depth k must be 1 or 2, got " + std::to_string(k));
  if (spec.order > kMaxOrder || grid.halo()[0] < spec.order) {
    throw std::invalid_argument("stencil order does not fit the grid halo");
  }
  const std::size_t bs = static_cast<std::size_t>(vl * vl);
  const std::size_t total_blocks = grid.padded_x() / bs;

  JamState st;
  st.k_ = k;
  st.vl_ = vl;
  st.reach_ = spec.order;
  st.grid_ = &grid;
  if (bounds) {
    st.bounds_ = *bounds;
  } else {
    st.bounds_.first_block = 0;
    st.bounds_.last_block = total_blocks;
  }
  const JamBounds& bd = st.bounds_;
  if (bd.first_block >= bd.last_block || bd.last_block > total_blocks) {
    throw std::out_of_range("jam block range [" + std::to_string(bd.first_block) + ", " +
                            std::to_string(bd.last_block) + ") is empty or outside the grid");
  }
  if (bd.y < grid.y_begin() || bd.y >= grid.y_end() || bd.z < grid.z_begin() || bd.z >= grid.z_end()) {
    throw std::out_of_range("jam row outside the grid");
  }
  for (const GridBuffer* e : bd.edge) {
    if (e && (!e->same_shape(grid) || !(e->layout() == grid.layout()))) {
      throw std::invalid_argument("jam edge grid differs in shape or layout");
    }
  }
  if (bd.mid && (!bd.mid->same_shape(grid) || !(bd.mid->layout() == grid.layout()))) {
    throw std::invalid_argument("jam intermediate grid differs in shape or layout");
  }
  st.n_valid_ = static_cast<std::ptrdiff_t>(grid.extents()[0]);
  st.nblocks_ = bd.last_block - bd.first_block;
  st.slots_.assign(static_cast<std::size_t>(k + 1) * bs, 0.0);
  st.vrl_.assign(static_cast<std::size_t>(k + 1) * kMaxOrder * static_cast<std::size_t>(vl), 0.0);
  st.level_.assign(static_cast<std::size_t>(k + 1), -1);
  st.block_.assign(static_cast<std::size_t>(k + 1), -1);
  st.stored_.assign(st.nblocks_, -1);
  JamAccess::run_until(st, spec, std::min<std::size_t>(static_cast<std::size_t>(k), JamAccess::end_cursor(st)));
  return st;
}

bool pipeline_advance(JamState& state, GridBuffer& grid, const StencilSpec& spec) {
  JamAccess::check_grid(state, grid);
  if (state.cursor() < static_cast<std::size_t>(state.k())) throw std::logic_error("jam state was not booted");
  if (state.cursor() >= JamAccess::block_count(state)) return false;
  JamAccess::run_until(state, spec, state.cursor() + 1);
  return true;
}

void drain(JamState& state, GridBuffer& grid, const StencilSpec& spec) {
  JamAccess::check_grid(state, grid);
  if (state.cursor() < JamAccess::block_count(state)) {
    throw std::logic_error("drain called with blocks still to load; advance the pipeline first");
  }
  JamAccess::run_until(state, spec, JamAccess::end_cursor(state));
}

void jam_run(GridBuffer& grid, const StencilSpec& spec, int k, const JamBounds& bounds, Counters* counters) {
  JamState st = boot(grid, spec, k, &bounds);
  JamAccess::run_until(st, spec, JamAccess::end_cursor(st));
  if (counters) *counters += st.counters();
}

void jam_sweep(GridBuffer& grid, const StencilSpec& spec, int k, int steps, Counters* counters) {
  if (k < 1) throw std::invalid_argument("jam depth k must be positive");
  if (grid.layout().kind == LayoutKind::block_transpose) check_register_budget(k, grid.layout().vl, spec);
  if (k > 2) throw std::invalid_argument("jam depth k must be 1 or 2, got " + std::to_string(k));
  if (steps < 0 || steps % k != 0) {
    throw std::invalid_argument("step count " + std::to_string(steps) + " is not divisible by k = " +
                                std::to_string(k));
  }
  for (int t = 0; t < steps; t += k) {
    JamState st = boot(grid, spec, k);
    JamAccess::run_until(st, spec, JamAccess::end_cursor(st));
    if (counters) *counters += st.counters();
  }
}

}  // namespace tstencil
