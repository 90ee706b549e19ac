#include "doctest.h"

#include <set>

#include "tstencil/transpose.hpp"

using namespace tstencil;

namespace {

// Input vector i holds labels i*vl + l; a transpose leaves i + l*vl in
// output vector i, lane l.
std::vector<std::vector<int>> labelled(int vl) {
  std::vector<std::vector<int>> in(static_cast<std::size_t>(vl), std::vector<int>(static_cast<std::size_t>(vl)));
  for (int i = 0; i < vl; ++i)
    for (int l = 0; l < vl; ++l) in[i][l] = i * vl + l;
  return in;
}

void check_is_transpose(const ShufflePlan& plan) {
  const int vl = plan.vl;
  const auto out = evaluate_plan(plan, labelled(vl));
  REQUIRE(out.size() == static_cast<std::size_t>(vl));
  for (int i = 0; i < vl; ++i)
    for (int l = 0; l < vl; ++l) CHECK(out[i][l] == l * vl + i);
}

}  // namespace

TEST_CASE("transpose plans move every label to its transposed position") {
  for (int vl : {4, 8}) {
    CAPTURE(vl);
    check_is_transpose(build_transpose_plan(vl));
    check_is_transpose(build_stage_swapped_plan(vl));
  }
}

TEST_CASE("plan op counts are vl log2 vl") {
  CHECK(build_transpose_plan(4).ops.size() == 8);
  CHECK(build_transpose_plan(8).ops.size() == 24);
  CHECK(build_stage_swapped_plan(8).ops.size() == 24);
}

TEST_CASE("vl=4 plan: cross-lane half exchanges first, interleaves last") {
  const ShufflePlan p = build_transpose_plan(4);
  for (int i = 0; i < 4; ++i) {
    CHECK(p.ops[i].kind == ShuffleKind::half_exchange);
    CHECK(p.ops[i].latency_class == simd::LatencyClass::cross_lane);
    CHECK(p.ops[i].stage == 1);
  }
  for (int i = 4; i < 8; ++i) {
    CHECK(p.ops[i].kind == ShuffleKind::interleave);
    CHECK(p.ops[i].latency_class == simd::LatencyClass::in_lane);
    CHECK(p.ops[i].stage == 2);
  }
  const ShufflePlan s = build_stage_swapped_plan(4);
  CHECK(s.ops.front().kind == ShuffleKind::interleave);
  CHECK(s.ops.back().kind == ShuffleKind::half_exchange);
}

TEST_CASE("vl=8 plan uses three stage kinds") {
  const ShufflePlan p = build_transpose_plan(8);
  std::set<ShuffleKind> kinds;
  for (const auto& op : p.ops) kinds.insert(op.kind);
  CHECK(kinds == std::set<ShuffleKind>{ShuffleKind::half_exchange, ShuffleKind::chunk_exchange,
                                       ShuffleKind::interleave});
  CHECK(p.ops[0].kind == ShuffleKind::half_exchange);
  CHECK(p.ops[8].kind == ShuffleKind::chunk_exchange);
  CHECK(p.ops[23].kind == ShuffleKind::interleave);
}

TEST_CASE("schedule: ordered plan is stall-free, stage-swapped plan finishes later") {
  const simd::LatencyModel model;  // in-lane 1, cross-lane 3, one issue per cycle
  const ScheduleResult good = schedule_cost(build_transpose_plan(4), model);
  CHECK(good.issue_cycles == 8);
  CHECK(good.makespan == 9);
  CHECK(good.stall_free);
  CHECK(good.issue_cycle == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});

  const ScheduleResult bad = schedule_cost(build_stage_swapped_plan(4), model);
  CHECK(bad.issue_cycles == 8);
  CHECK(bad.makespan == 11);
  CHECK(bad.makespan > good.makespan);
}

TEST_CASE("schedule: hand-computed cases") {
  // All ops one cycle: any dependency-ordered plan is stall-free at width 1.
  const simd::LatencyModel unit{1, 1, 1};
  const ScheduleResult s = schedule_cost(build_stage_swapped_plan(4), unit);
  CHECK(s.stall_free);
  CHECK(s.makespan == 9);

  // Width 2 with the default latencies: stage one issues in cycles 1-2 and
  // completes at 4-5; interleaves of pair (0,1) need ops 0 and 2 (done 4).
  const simd::LatencyModel wide{1, 3, 2};
  const ScheduleResult w = schedule_cost(build_transpose_plan(4), wide);
  CHECK(w.issue_cycle == std::vector<int>{1, 1, 2, 2, 4, 4, 5, 5});
  CHECK(w.makespan == 6);
  CHECK_FALSE(w.stall_free);

  CHECK_THROWS_AS(schedule_cost(build_transpose_plan(4), simd::LatencyModel{0, 3, 1}), std::invalid_argument);
}

TEST_CASE("validate_plan rejects cycles and redefinitions") {
  ShufflePlan p = build_transpose_plan(4);
  CHECK_NOTHROW(validate_plan(p));

  ShufflePlan cyc = p;
  cyc.ops[0].src_a = cyc.ops[5].dst;  // reads a value produced later
  CHECK_THROWS_AS(validate_plan(cyc), std::invalid_argument);
  CHECK_THROWS_AS(schedule_cost(cyc), std::invalid_argument);

  ShufflePlan redef = p;
  redef.ops[3].dst = redef.ops[1].dst;
  CHECK_THROWS_AS(validate_plan(redef), std::invalid_argument);

  ShufflePlan range = p;
  range.ops[2].src_b = 999;
  CHECK_THROWS_AS(validate_plan(range), std::invalid_argument);

  CHECK_THROWS_AS(build_transpose_plan(6), std::invalid_argument);
}

TEST_CASE("plans evaluate blend and rotate ops") {
  ShufflePlan p;
  p.vl = 4;
  p.inputs = {0, 1, 2, 3};
  p.value_count = 6;
  ShuffleOp blend;
  blend.kind = ShuffleKind::blend;
  blend.src_a = 0;
  blend.src_b = 1;
  blend.dst = 4;
  blend.mask = 0b1000;
  ShuffleOp rot;
  rot.kind = ShuffleKind::rotate;
  rot.src_a = rot.src_b = 4;
  rot.dst = 5;
  rot.shift = 1;
  p.ops = {blend, rot};
  p.outputs = {5, 1, 2, 3};
  // Left-neighbour assembly: prev last row (W X Y Z), current last row (D H L P).
  const std::vector<std::vector<char>> in{{'D', 'H', 'L', 'P'}, {'W', 'X', 'Y', 'Z'}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  const auto out = evaluate_plan(p, in);
  CHECK(out[0] == std::vector<char>{'Z', 'D', 'H', 'L'});
}

TEST_CASE("apply_plan transposes a vector set") {
  for (int vl : {4, 8}) {
    VectorSet natural(vl, 64);
    for (int j = 0; j < vl; ++j)
      for (int l = 0; l < vl; ++l) natural.at(j, l) = 64.0 + j * vl + l;
    const VectorSet t = apply_plan(build_transpose_plan(vl), natural);
    for (int j = 0; j < vl; ++j)
      for (int l = 0; l < vl; ++l) CHECK(t.at(j, l) == 64.0 + l * vl + j);
    CHECK(apply_plan(build_transpose_plan(vl), t) == natural);
  }
  CHECK_THROWS_AS(apply_plan(build_transpose_plan(4), VectorSet(8, 0)), std::invalid_argument);
}

TEST_CASE("compiled register transpose matches the plan") {
  alignas(64) double buf[64];
  for (int i = 0; i < 64; ++i) buf[i] = i;
  std::array<simd::Vec<8>, 8> r;
  for (int j = 0; j < 8; ++j) r[j] = simd::Vec<8>::load(buf + 8 * j);
  transpose_registers(r);
  for (int j = 0; j < 8; ++j)
    for (int l = 0; l < 8; ++l) CHECK(r[j].get(l) == l * 8 + j);

  std::array<simd::Vec<4>, 4> q;
  for (int j = 0; j < 4; ++j) q[j] = simd::Vec<4>::load(buf + 4 * j);
  transpose_registers(q);
  for (int j = 0; j < 4; ++j)
    for (int l = 0; l < 4; ++l) CHECK(q[j].get(l) == l * 4 + j);

  std::array<simd::PortableVec<8>, 8> p;
  for (int j = 0; j < 8; ++j) p[j] = simd::PortableVec<8>::load(buf + 8 * j);
  transpose_registers(p);
  for (int j = 0; j < 8; ++j) CHECK(simd::to_array(p[j]) == simd::to_array(r[j]));
}

TEST_CASE("dump_plan lists every op and the schedule") {
  const std::string d = dump_plan(build_transpose_plan(4));
  CHECK(d.find("half_exchange") != std::string::npos);
  CHECK(d.find("interleave") != std::string::npos);
  CHECK(d.find("makespan 9") != std::string::npos);
  CHECK(d.find("stall-free") != std::string::npos);
}

TEST_CASE("block transpose round trip is bit-exact") {
  const StencilSpec s = make_stencil_spec("2d9p");
  for (int vl : {4, 8}) {
    for (std::size_t n : {std::size_t{5}, std::size_t{64}, std::size_t{100}}) {
      CAPTURE(vl);
      CAPTURE(n);
      GridBuffer nat = alloc_grid(s, {n, 3, 1}, Layout::natural(), vl);
      seed_uniform(nat, 11);
      GridBuffer bt = to_block_transpose(nat, vl);
      CHECK(bt.layout() == Layout::block_transpose(vl));
      CHECK(bt.padded_x() % static_cast<std::size_t>(vl * vl) == 0);
      for (std::ptrdiff_t y = nat.y_begin(); y < nat.y_end(); ++y)
        for (std::ptrdiff_t x = nat.x_begin(); x < nat.x_end(); ++x) CHECK(bt.get(x, y, 0) == nat.get(x, y, 0));
      GridBuffer back = from_block_transpose(bt);
      CHECK(back.layout() == Layout::natural());
      for (std::ptrdiff_t y = nat.y_begin(); y < nat.y_end(); ++y)
        for (std::ptrdiff_t x = nat.x_begin(); x < nat.x_end(); ++x) CHECK(back.get(x, y, 0) == nat.get(x, y, 0));
      // Raw storage of a second round trip is identical.
      CHECK(from_block_transpose(to_block_transpose(back, vl)).raw() == back.raw());
    }
  }
}

TEST_CASE("in-place block transpose matches the position map") {
  GridBuffer g = alloc_grid(make_stencil_spec("1d3p"), {64, 1, 1}, Layout::natural(), 4);
  for (std::ptrdiff_t x = 0; x < 64; ++x) g.row(0, 0)[x] = static_cast<double>(x);
  transpose_blocks_in_place(g, 4);
  CHECK(g.layout() == Layout::block_transpose(4));
  for (std::ptrdiff_t x = 0; x < 64; ++x) CHECK(g.get(x) == static_cast<double>(x));
  transpose_blocks_in_place(g, 4);
  CHECK(g.layout() == Layout::natural());
  for (std::ptrdiff_t x = 0; x < 64; ++x) CHECK(g.row(0, 0)[x] == static_cast<double>(x));
}

TEST_CASE("layout conversions reject bad inputs") {
  const StencilSpec s = make_stencil_spec("1d3p");
  GridBuffer odd = alloc_grid(s, {18, 1, 1}, Layout::natural(), 4);
  CHECK_THROWS_AS(transpose_blocks_in_place(odd, 4), std::invalid_argument);
  CHECK_THROWS_AS(to_dlt(odd, 4), std::invalid_argument);
  CHECK_THROWS_AS(to_block_transpose(odd, 5), std::invalid_argument);
  GridBuffer bt = to_block_transpose(odd, 4);
  CHECK_THROWS_AS(to_block_transpose(bt, 4), std::invalid_argument);
  CHECK_THROWS_AS(from_dlt(bt), std::invalid_argument);
  CHECK_THROWS_AS(transpose_blocks_in_place(bt, 8), std::invalid_argument);
  GridBuffer nat = alloc_grid(s, {16, 1, 1}, Layout::natural(), 4);
  CHECK_THROWS_AS(from_block_transpose(nat), std::invalid_argument);
}

TEST_CASE("dlt is a bijection and round-trips") {
  const StencilSpec s = make_stencil_spec("2d5p");
  GridBuffer nat = alloc_grid(s, {24, 3, 1}, Layout::natural(), 4);
  seed_uniform(nat, 5);
  GridBuffer d = to_dlt(nat, 4);
  CHECK(d.layout() == Layout::dlt(4));
  std::set<std::ptrdiff_t> positions;
  for (std::ptrdiff_t x = 0; x < 24; ++x) positions.insert(d.position(x));
  CHECK(positions.size() == 24);
  CHECK(*positions.begin() == 0);
  CHECK(*positions.rbegin() == 23);
  // Natural q * m + c sits in vector c, lane q.
  const std::ptrdiff_t m = 6;
  for (std::ptrdiff_t q = 0; q < 4; ++q)
    for (std::ptrdiff_t c = 0; c < m; ++c) CHECK(d.row(1, 0)[c * 4 + q] == nat.get(q * m + c, 1, 0));
  GridBuffer back = from_dlt(d);
  for (std::ptrdiff_t y = nat.y_begin(); y < nat.y_end(); ++y)
    for (std::ptrdiff_t x = nat.x_begin(); x < nat.x_end(); ++x) CHECK(back.get(x, y, 0) == nat.get(x, y, 0));
}

TEST_CASE("m_min") {
  CHECK(m_min(1) == 2);
  CHECK(m_min(2) == 3);
  CHECK_THROWS_AS(m_min(0), std::invalid_argument);
}
