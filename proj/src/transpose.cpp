#include "tstencil/transpose.hpp"

#include <algorithm>
#include <sstream>

namespace tstencil {

namespace {

ShufflePlan build_network(int vl, const std::vector<int>& granularities) {
  if (vl != 4 && vl != 8) throw std::invalid_argument("transpose plans exist for vl 4 and 8, got " + std::to_string(vl));
  ShufflePlan plan;
  plan.vl = vl;
  std::vector<int> current(static_cast<std::size_t>(vl));
  for (int i = 0; i < vl; ++i) {
    plan.inputs.push_back(i);
    current[i] = i;
  }
  int next_id = vl;
  for (std::size_t s = 0; s < granularities.size(); ++s) {
    const int g = granularities[s];
    const bool last = s + 1 == granularities.size();
    std::vector<int> updated = current;
    auto emit = [&](int i, simd::Parity p) {
      ShuffleOp op;
      op.src_a = current[i];
      op.src_b = current[i + g];
      op.dst = next_id++;
      op.granularity = g;
      op.parity = p;
      op.stage = static_cast<int>(s) + 1;
      op.latency_class = simd::exchange_class(g);
      if (g == vl / 2) {
        op.kind = ShuffleKind::half_exchange;
        op.half_a = op.half_b = static_cast<simd::Half>(p);
      } else if (g == 1) {
        op.kind = ShuffleKind::interleave;
      } else {
        op.kind = ShuffleKind::chunk_exchange;
      }
      plan.ops.push_back(op);
      updated[p == simd::Parity::low ? i : i + g] = op.dst;
    };
    std::vector<int> pairs;
    for (int i = 0; i < vl; ++i)
      if (!(i & g)) pairs.push_back(i);
    if (last) {
      // Each pair's two outputs back to back: the pair's sources were
      // produced in the same order by the previous stage.
      for (int i : pairs) {
        emit(i, simd::Parity::low);
        emit(i, simd::Parity::high);
      }
    } else {
      for (int i : pairs) emit(i, simd::Parity::low);
      for (int i : pairs) emit(i, simd::Parity::high);
    }
    current = updated;
  }
  plan.outputs = current;
  plan.value_count = next_id;
  return plan;
}

std::vector<int> stage_granularities(int vl) {
  std::vector<int> g;
  for (int s = vl / 2; s >= 1; s /= 2) g.push_back(s);
  return g;
}

}  // namespace

std::string to_string(ShuffleKind kind) {
  switch (kind) {
    case ShuffleKind::half_exchange: return "half_exchange";
    case ShuffleKind::chunk_exchange: return "chunk_exchange";
    case ShuffleKind::interleave: return "interleave";
    case ShuffleKind::blend: return "blend";
    case ShuffleKind::rotate: return "rotate";
  }
  return "?";
}

ShufflePlan build_transpose_plan(int vl) { return build_network(vl, stage_granularities(vl)); }

ShufflePlan build_stage_swapped_plan(int vl) {
  auto g = stage_granularities(vl);
  std::reverse(g.begin(), g.end());
  return build_network(vl, g);
}

void validate_plan(const ShufflePlan& plan) {
  std::vector<bool> defined(static_cast<std::size_t>(std::max(plan.value_count, 0)), false);
  auto check = [&](int id) { return id >= 0 && id < plan.value_count; };
  for (int id : plan.inputs) {
    if (!check(id)) throw std::invalid_argument("plan input id out of range");
    defined[id] = true;
  }
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const ShuffleOp& op = plan.ops[i];
    if (!check(op.src_a) || !check(op.src_b) || !check(op.dst)) {
      throw std::invalid_argument("plan op " + std::to_string(i) + " references an unknown value");
    }
    if (!defined[op.src_a] || !defined[op.src_b]) {
      throw std::invalid_argument("plan op " + std::to_string(i) + " reads a value before it is defined (cycle)");
    }
    if (defined[op.dst]) throw std::invalid_argument("plan op " + std::to_string(i) + " redefines a value");
    defined[op.dst] = true;
  }
  for (int id : plan.outputs) {
    if (!check(id) || !defined[id]) throw std::invalid_argument("plan output is never defined");
  }
}

VectorSet apply_plan(const ShufflePlan& plan, const VectorSet& vs) {
  if (plan.vl != vs.vl) throw std::invalid_argument("apply_plan: plan and vector set lane counts differ");
  std::vector<std::vector<double>> in;
  for (int j = 0; j < vs.vl; ++j) in.push_back(vs.row(j));
  const auto out = evaluate_plan(plan, in);
  VectorSet r(vs.vl, vs.base);
  for (int j = 0; j < vs.vl; ++j)
    for (int l = 0; l < vs.vl; ++l) r.at(j, l) = out[j][l];
  return r;
}

ScheduleResult schedule_cost(const ShufflePlan& plan, const simd::LatencyModel& model) {
  validate_plan(plan);
  if (model.in_lane_latency < 1 || model.cross_lane_latency < 1 || model.issue_width < 1) {
    throw std::invalid_argument("latency model entries must be positive");
  }
  std::vector<int> complete(static_cast<std::size_t>(plan.value_count), 0);
  ScheduleResult res;
  res.stall_free = true;
  int cycle = 1;
  int issued_in_cycle = 0;
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const ShuffleOp& op = plan.ops[i];
    int t = std::max({cycle, complete[op.src_a], complete[op.src_b]});
    if (t == cycle && issued_in_cycle >= model.issue_width) ++t;
    if (t != cycle) {
      cycle = t;
      issued_in_cycle = 0;
    }
    ++issued_in_cycle;
    const int ideal = static_cast<int>(i) / model.issue_width + 1;
    if (t != ideal) res.stall_free = false;
    res.issue_cycle.push_back(t);
    complete[op.dst] = t + model.latency(op.latency_class);
    res.issue_cycles = t;
    res.makespan = std::max(res.makespan, complete[op.dst]);
  }
  return res;
}

std::string dump_plan(const ShufflePlan& plan, const simd::LatencyModel& model) {
  const ScheduleResult sched = schedule_cost(plan, model);
  std::ostringstream os;
  os << "shuffle plan vl=" << plan.vl << " ops=" << plan.ops.size() << "\n";
  os << "  #  stage  kind            src_a src_b  dst  imm          class       issue  done\n";
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const ShuffleOp& op = plan.ops[i];
    std::string imm;
    switch (op.kind) {
      case ShuffleKind::half_exchange:
        imm = std::string(op.half_a == simd::Half::low ? "lo" : "hi") + "," + (op.half_b == simd::Half::low ? "lo" : "hi");
        break;
      case ShuffleKind::chunk_exchange:
      case ShuffleKind::interleave:
        imm = "g=" + std::to_string(op.granularity) + (op.parity == simd::Parity::low ? ",lo" : ",hi");
        break;
      case ShuffleKind::blend: imm = "mask=" + std::to_string(op.mask); break;
      case ShuffleKind::rotate: imm = "shift=" + std::to_string(op.shift); break;
    }
    const int lat = model.latency(op.latency_class);
    char line[160];
    std::snprintf(line, sizeof line, "%3zu  %5d  %-15s %5d %5d %4d  %-11s  %-10s  %5d %5d\n", i, op.stage,
                  to_string(op.kind).c_str(), op.src_a, op.src_b, op.dst, imm.c_str(),
                  op.latency_class == simd::LatencyClass::in_lane ? "in-lane" : "cross-lane", sched.issue_cycle[i],
                  sched.issue_cycle[i] + lat);
    os << line;
  }
  os << "outputs:";
  for (int id : plan.outputs) os << ' ' << id;
  os << "\nissue cycles " << sched.issue_cycles << ", makespan " << sched.makespan
     << (sched.stall_free ? ", stall-free" : ", stalls") << " (in-lane " << model.in_lane_latency << ", cross-lane "
     << model.cross_lane_latency << ", width " << model.issue_width << ")\n";
  return os.str();
}

namespace {

template <int VL>
void transpose_row(double* row, std::size_t padded) {
  using V = simd::Vec<VL>;
  constexpr std::size_t block = VL * VL;
  for (std::size_t b = 0; b + block <= padded; b += block) {
    std::array<V, VL> r;
    for (int j = 0; j < VL; ++j) r[j] = V::load(row + b + j * VL);
    transpose_registers(r);
    for (int j = 0; j < VL; ++j) r[j].store(row + b + j * VL);
  }
}

}  // namespace

void transpose_blocks_in_place(GridBuffer& grid, int vl) {
  if (vl != 4 && vl != 8) throw std::invalid_argument("vector length must be 4 or 8");
  const std::size_t block = static_cast<std::size_t>(vl * vl);
  if (grid.padded_x() % block != 0) {
    throw std::invalid_argument("unit-stride extent " + std::to_string(grid.padded_x()) +
                                " is not a multiple of vl*vl");
  }
  const LayoutKind kind = grid.layout().kind;
  if (kind == LayoutKind::dlt || (kind == LayoutKind::block_transpose && grid.layout().vl != vl)) {
    throw std::invalid_argument("transpose_blocks_in_place: incompatible layout " + to_string(grid.layout()));
  }
  for (std::ptrdiff_t z = grid.z_begin(); z < grid.z_end(); ++z)
    for (std::ptrdiff_t y = grid.y_begin(); y < grid.y_end(); ++y) {
      if (vl == 4) transpose_row<4>(grid.row(y, z), grid.padded_x());
      else transpose_row<8>(grid.row(y, z), grid.padded_x());
    }
  grid.set_layout(kind == LayoutKind::natural ? Layout::block_transpose(vl) : Layout::natural());
}

GridBuffer to_block_transpose(const GridBuffer& natural, int vl) {
  if (natural.layout().kind != LayoutKind::natural) {
    throw std::invalid_argument("to_block_transpose expects a natural grid, got " + to_string(natural.layout()));
  }
  if (vl != 4 && vl != 8) throw std::invalid_argument("vector length must be 4 or 8");
  const std::size_t block = static_cast<std::size_t>(vl * vl);
  const std::size_t padded = (natural.padded_x() + block - 1) / block * block;
  GridBuffer out = alloc_like(natural, padded, Layout::natural());
  for (std::ptrdiff_t z = natural.z_begin(); z < natural.z_end(); ++z)
    for (std::ptrdiff_t y = natural.y_begin(); y < natural.y_end(); ++y) {
      const double* s = natural.row(y, z);
      std::copy(s + natural.x_begin(), s + natural.x_end(), out.row(y, z) + natural.x_begin());
    }
  transpose_blocks_in_place(out, vl);
  return out;
}

GridBuffer from_block_transpose(const GridBuffer& transposed) {
  if (transposed.layout().kind != LayoutKind::block_transpose) {
    throw std::invalid_argument("from_block_transpose expects a block_transpose grid, got " +
                                to_string(transposed.layout()));
  }
  GridBuffer out = transposed;
  transpose_blocks_in_place(out, transposed.layout().vl);
  return out;
}

namespace {

void copy_rows_permuted(const GridBuffer& src, GridBuffer& dst) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dst.padded_x());
  const int hx = src.halo()[0];
  for (std::ptrdiff_t z = src.z_begin(); z < src.z_end(); ++z)
    for (std::ptrdiff_t y = src.y_begin(); y < src.y_end(); ++y)
      for (std::ptrdiff_t x = -hx; x < n + hx; ++x) dst.set(x, y, z, src.get(x, y, z));
}

}  // namespace

GridBuffer to_dlt(const GridBuffer& natural, int vl) {
  if (natural.layout().kind != LayoutKind::natural) {
    throw std::invalid_argument("to_dlt expects a natural grid, got " + to_string(natural.layout()));
  }
  if (vl != 4 && vl != 8) throw std::invalid_argument("vector length must be 4 or 8");
  const std::size_t n = natural.extents()[0];
  if (n % static_cast<std::size_t>(vl) != 0) {
    throw std::invalid_argument("DLT needs the unit-stride extent " + std::to_string(n) + " divisible by vl " +
                                std::to_string(vl));
  }
  GridBuffer out(natural.dim(), natural.extents(), n, natural.halo(), Layout::dlt(vl));
  copy_rows_permuted(natural, out);
  return out;
}

GridBuffer from_dlt(const GridBuffer& dlt) {
  if (dlt.layout().kind != LayoutKind::dlt) {
    throw std::invalid_argument("from_dlt expects a dlt grid, got " + to_string(dlt.layout()));
  }
  GridBuffer out(dlt.dim(), dlt.extents(), dlt.padded_x(), dlt.halo(), Layout::natural());
  copy_rows_permuted(dlt, out);
  return out;
}

int m_min(int r) {
  if (r < 1) throw std::invalid_argument("order must be positive");
  int m = 1;
  while ((2 * r + 1) * (m - 1) + 1 < 4 * r) ++m;
  return m;
}

}  // namespace tstencil
