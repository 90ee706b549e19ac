#pragma once

// Layout machinery: vl x vl register-transpose shuffle plans, their
// issue/latency schedule, blockwise conversion between the natural and
// block-transposed layouts, and the global dimension-lifted transpose.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tstencil/core.hpp"
#include "tstencil/simd.hpp"

namespace tstencil {

enum class ShuffleKind {
  half_exchange,   // imm: (half of a, half of b)
  chunk_exchange,  // imm: granularity (lanes), parity; 1 < g < vl/2
  interleave,      // imm: parity
  blend,           // imm: lane mask
  rotate,          // imm: right-circular shift count
};

std::string to_string(ShuffleKind kind);

/// One network edge: dst = kind<imm>(src_a, src_b). Value ids are
/// single-assignment; ids [0, vl) are the plan inputs.
struct ShuffleOp {
  ShuffleKind kind = ShuffleKind::interleave;
  int src_a = 0;
  int src_b = 0;
  int dst = 0;
  int granularity = 1;  // exchange kinds
  simd::Parity parity = simd::Parity::low;
  simd::Half half_a = simd::Half::low;  // half_exchange
  simd::Half half_b = simd::Half::low;
  unsigned mask = 0;  // blend
  int shift = 0;      // rotate
  int stage = 0;
  simd::LatencyClass latency_class = simd::LatencyClass::in_lane;
};

struct ShufflePlan {
  int vl = 0;
  std::vector<ShuffleOp> ops;
  std::vector<int> inputs;
  std::vector<int> outputs;
  int value_count = 0;
};

/// Transpose network with the cross-lane stages first and the in-lane stage
/// last, ordered so every in-lane op finds its sources complete.
ShufflePlan build_transpose_plan(int vl);

/// Same network with the stage order reversed (in-lane stage first).
ShufflePlan build_stage_swapped_plan(int vl);

/// Throws std::invalid_argument if an op reads a value not yet defined
/// (which covers cycles) or redefines one.
void validate_plan(const ShufflePlan& plan);

/// Evaluates the plan on arbitrary lane payloads (doubles, or integer lane
/// labels for symbolic checks). inputs[i] is the i-th input vector.
template <class T>
std::vector<std::vector<T>> evaluate_plan(const ShufflePlan& plan, const std::vector<std::vector<T>>& inputs);

/// Transposes a VectorSet by evaluating the plan.
VectorSet apply_plan(const ShufflePlan& plan, const VectorSet& vs);

struct ScheduleResult {
  int issue_cycles = 0;  // cycle in which the last op issues (first cycle is 1)
  int makespan = 0;      // completion cycle of the last op
  bool stall_free = false;
  std::vector<int> issue_cycle;  // per op
};

/// In-order issue of at most issue_width ops per cycle; an op issues at the
/// earliest cycle not before its predecessor's at which all its sources are
/// complete (completion = issue + latency).
ScheduleResult schedule_cost(const ShufflePlan& plan, const simd::LatencyModel& model = {});

/// Text listing of every op plus the issue table.
std::string dump_plan(const ShufflePlan& plan, const simd::LatencyModel& model = {});

/// Transposes a vl x vl register block in place with the compiled network
/// (same stages and ops as build_transpose_plan).
template <class V>
inline void transpose_registers(std::array<V, V::lanes>& r);

/// Blockwise natural -> transposed conversion. The result is padded to whole
/// vl*vl blocks; padding cells take the natural boundary values.
GridBuffer to_block_transpose(const GridBuffer& natural, int vl);

/// Inverse of to_block_transpose; the natural result keeps the padding.
GridBuffer from_block_transpose(const GridBuffer& transposed);

/// Transposes every aligned vl*vl block of every row in place (the map is an
/// involution) and flips the layout tag between natural and block_transpose.
void transpose_blocks_in_place(GridBuffer& grid, int vl);

/// Global dimension-lifted transpose of the unit-stride dimension: natural
/// index q * (N / vl) + c moves to c * vl + q.
GridBuffer to_dlt(const GridBuffer& natural, int vl);
GridBuffer from_dlt(const GridBuffer& dlt);

/// Smallest row count m with (2r + 1)(m - 1) + 1 >= 4r.
int m_min(int r);

// ---------------------------------------------------------------------------

namespace detail {

template <class T>
std::vector<T> exchange_lanes(const std::vector<T>& a, const std::vector<T>& b, int g, simd::Parity p) {
  const int vl = static_cast<int>(a.size());
  std::vector<T> r(a.size());
  const int shift = p == simd::Parity::high ? g : 0;
  for (int l = 0; l < vl; ++l) {
    const int chunk = l / (2 * g) * (2 * g);
    const int w = l % (2 * g);
    r[l] = w < g ? a[chunk + w + shift] : b[chunk + w - g + shift];
  }
  return r;
}

template <class V, int G>
inline void transpose_stage(std::array<V, V::lanes>& r) {
  constexpr int vl = V::lanes;
  for (int i = 0; i < vl; ++i) {
    if (i & G) continue;
    const V lo = simd::exchange<G, simd::Parity::low>(r[i], r[i + G]);
    const V hi = simd::exchange<G, simd::Parity::high>(r[i], r[i + G]);
    r[i] = lo;
    r[i + G] = hi;
  }
}

}  // namespace detail

template <class T>
std::vector<std::vector<T>> evaluate_plan(const ShufflePlan& plan, const std::vector<std::vector<T>>& inputs) {
  if (static_cast<int>(inputs.size()) != plan.vl) throw std::invalid_argument("evaluate_plan: wrong input count");
  std::vector<std::vector<T>> values(static_cast<std::size_t>(plan.value_count));
  for (int i = 0; i < plan.vl; ++i) {
    if (static_cast<int>(inputs[i].size()) != plan.vl) throw std::invalid_argument("evaluate_plan: wrong lane count");
    values[plan.inputs[i]] = inputs[i];
  }
  const int vl = plan.vl;
  for (const ShuffleOp& op : plan.ops) {
    const auto& a = values[op.src_a];
    const auto& b = values[op.src_b];
    std::vector<T> r(a.size());
    switch (op.kind) {
      case ShuffleKind::half_exchange: {
        const int h = vl / 2;
        for (int l = 0; l < h; ++l) {
          r[l] = a[l + (op.half_a == simd::Half::high ? h : 0)];
          r[l + h] = b[l + (op.half_b == simd::Half::high ? h : 0)];
        }
        break;
      }
      case ShuffleKind::chunk_exchange:
        r = detail::exchange_lanes(a, b, op.granularity, op.parity);
        break;
      case ShuffleKind::interleave:
        r = detail::exchange_lanes(a, b, 1, op.parity);
        break;
      case ShuffleKind::blend:
        for (int l = 0; l < vl; ++l) r[l] = ((op.mask >> l) & 1u) ? b[l] : a[l];
        break;
      case ShuffleKind::rotate:
        for (int l = 0; l < vl; ++l) r[l] = a[((l - op.shift) % vl + vl) % vl];
        break;
    }
    values[op.dst] = std::move(r);
  }
  std::vector<std::vector<T>> out;
  out.reserve(plan.outputs.size());
  for (int id : plan.outputs) out.push_back(values[id]);
  return out;
}

template <class V>
inline void transpose_registers(std::array<V, V::lanes>& r) {
  constexpr int vl = V::lanes;
  detail::transpose_stage<V, vl / 2>(r);
  if constexpr (vl == 8) detail::transpose_stage<V, 2>(r);
  detail::transpose_stage<V, 1>(r);
}

}  // namespace tstencil
