#include "doctest.h"

#include <random>

#include "reference.hpp"
#include "tstencil/kernels.hpp"
#include "tstencil/transpose.hpp"

using namespace tstencil;

namespace {

// Natural grid seeded with `seed`, converted to the method's layout.
GridBuffer seeded(const StencilSpec& spec, Extents dims, Method m, int vl, std::uint64_t seed) {
  GridBuffer nat = alloc_grid(spec, dims, Layout::natural(), vl);
  seed_uniform(nat, seed);
  if (m == Method::transpose) return to_block_transpose(nat, vl);
  if (m == Method::dlt) return to_dlt(nat, vl);
  return nat;
}

GridBuffer filled(const StencilSpec& spec, Extents dims, Method m, int vl, double value) {
  GridBuffer g = seeded(spec, dims, m, vl, 1);
  for (auto& v : g.raw()) v = value;
  return g;
}

bool dlt_ok(const Extents& e, int vl) { return e[0] % static_cast<std::size_t>(vl) == 0 && e[0] / vl >= 2; }

const Method kAll[] = {Method::scalar, Method::multiload, Method::reorg, Method::dlt, Method::transpose};

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : kAll) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("simd"), std::invalid_argument);
  CHECK(layout_for(Method::transpose, 8) == Layout::block_transpose(8));
  CHECK(layout_for(Method::dlt, 4) == Layout::dlt(4));
  CHECK(layout_for(Method::reorg, 4) == Layout::natural());
}

TEST_CASE("scalar step: impulse, constant and ramp") {
  const StencilSpec s = make_stencil_spec("1d3p");
  GridBuffer a = alloc_grid(s, {5, 1, 1}, Layout::natural(), 4);
  GridBuffer b = a;
  a.set(2, 0, 0, 1.0);
  scalar_step(a, b, s);
  const double expect[] = {0, 0.25, 0.5, 0.25, 0};
  for (int x = 0; x < 5; ++x) CHECK(b.get(x) == expect[x]);

  for (auto& v : a.raw()) v = 2.5;
  scalar_step(a, b, s);
  for (int x = -2; x < 7; ++x) CHECK(b.get(x) == 2.5);

  GridBuffer r = alloc_grid(make_stencil_spec("1d5p"), {40, 1, 1}, Layout::natural(), 4);
  GridBuffer r2 = r;
  for (std::ptrdiff_t x = r.x_begin(); x < r.x_end(); ++x) r.set(x, 0, 0, static_cast<double>(x));
  scalar_step(r, r2, make_stencil_spec("1d5p"));
  for (int x = 0; x < 40; ++x) CHECK(r2.get(x) == static_cast<double>(x));
  // Halo copied unchanged.
  CHECK(r2.get(-3) == -3.0);
  CHECK(r2.get(41) == 41.0);
}

TEST_CASE("every method reproduces the analytic cases exactly") {
  for (int vl : {4, 8}) {
    for (Method m : kAll) {
      CAPTURE(to_string(m));
      CAPTURE(vl);
      const StencilSpec s = make_stencil_spec("1d3p");
      // Impulse in a grid long enough for every method.
      const std::size_t n = static_cast<std::size_t>(vl * vl * 2);
      GridBuffer nat = alloc_grid(s, {n, 1, 1}, Layout::natural(), vl);
      nat.set(20, 0, 0, 1.0);
      GridBuffer src = m == Method::transpose ? to_block_transpose(nat, vl) : m == Method::dlt ? to_dlt(nat, vl) : nat;
      GridBuffer dst = src;
      run_step(m, vl, src, dst, s);
      for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(n); ++x) {
        const double want = x == 19 || x == 21 ? 0.25 : x == 20 ? 0.5 : 0.0;
        CHECK(dst.get(x) == want);
      }
      // Ramp including the boundary.
      for (std::ptrdiff_t x = src.x_begin(); x < static_cast<std::ptrdiff_t>(n) + src.halo()[0]; ++x)
        src.set(x, 0, 0, 0.5 * x);
      run_step(m, vl, src, dst, s);
      for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(n); ++x) CHECK(dst.get(x) == 0.5 * x);
    }
  }
}

TEST_CASE("constant grids stay constant under every method and preset") {
  for (const auto& name : preset_names()) {
    const StencilSpec s = make_stencil_spec(name);
    const Extents dims = make_extents(s.dim, {s.dim == 1 ? std::size_t{96} : std::size_t{16}});
    for (int vl : {4, 8}) {
      for (Method m : kAll) {
        if (m == Method::dlt && !dlt_ok(dims, vl)) continue;
        CAPTURE(name);
        CAPTURE(to_string(m));
        CAPTURE(vl);
        GridBuffer src = filled(s, dims, m, vl, 1.5);
        GridBuffer dst = filled(s, dims, m, vl, 0.0);
        run_step(m, vl, src, dst, s);
        bool all = true;
        for (std::ptrdiff_t z = 0; z < static_cast<std::ptrdiff_t>(dims[2]); ++z)
          for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(dims[1]); ++y)
            for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(dims[0]); ++x) all = all && dst.get(x, y, z) == 1.5;
        CHECK(all);
      }
    }
  }
}

TEST_CASE("method equivalence against the oracle on random grids") {
  struct Case {
    const char* stencil;
    Extents dims;
  };
  const Case cases[] = {
      {"1d3p", {37, 1, 1}},   {"1d3p", {1024, 1, 1}}, {"1d3p", {4096, 1, 1}}, {"1d5p", {100, 1, 1}},
      {"1d5p", {4096, 1, 1}}, {"2d5p", {64, 64, 1}},  {"2d5p", {13, 7, 1}},    {"2d9p", {40, 33, 1}},
      {"2d9p", {64, 64, 1}},  {"3d7p", {9, 8, 7}},    {"3d7p", {24, 20, 16}},  {"3d27p", {16, 9, 10}},
      {"3d27p", {32, 12, 8}},
  };
  for (const Case& c : cases) {
    const StencilSpec s = make_stencil_spec(c.stencil);
    for (int vl : {4, 8}) {
      for (Method m : kAll) {
        if (m == Method::dlt && !dlt_ok(c.dims, vl)) continue;
        CAPTURE(c.stencil);
        CAPTURE(c.dims[0]);
        CAPTURE(to_string(m));
        CAPTURE(vl);
        GridBuffer src = seeded(s, c.dims, m, vl, 99);
        GridBuffer dst = src;
        for (auto& v : dst.raw()) v = -1.0;
        const ref::Dense want = ref::step(ref::to_dense(src), s);
        run_step(m, vl, src, dst, s);
        CHECK(ref::max_rel(dst, want) <= 1e-13);
        // Accumulation order and rounding match the oracle, so the results
        // are in fact identical.
        CHECK(ref::identical(dst, want));
        // Boundary cells carried over unchanged.
        CHECK(dst.get(-1, 0, 0) == src.get(-1, 0, 0));
        CHECK(dst.get(static_cast<std::ptrdiff_t>(c.dims[0]), 0, 0) ==
              src.get(static_cast<std::ptrdiff_t>(c.dims[0]), 0, 0));
      }
    }
  }
}

TEST_CASE("layout round trip around a step matches the natural sweep") {
  const StencilSpec s = make_stencil_spec("1d3p");
  GridBuffer nat = alloc_grid(s, {4096, 1, 1}, Layout::natural(), 4);
  seed_uniform(nat, 3);
  GridBuffer nat_out = nat;
  scalar_step(nat, nat_out, s);
  for (int vl : {4, 8}) {
    GridBuffer d = to_dlt(nat, vl), d_out = d;
    dlt_step(d, d_out, s);
    CHECK(max_relative_error(from_dlt(d_out), nat_out) <= 1e-13);
    GridBuffer t = to_block_transpose(nat, vl), t_out = t;
    transpose_layout_step(t, t_out, s);
    CHECK(max_relative_error(from_block_transpose(t_out), nat_out) <= 1e-13);
  }
}

TEST_CASE("impulse spreads at most r cells per step") {
  for (const char* name : {"1d3p", "1d5p", "2d9p", "3d7p"}) {
    const StencilSpec s = make_stencil_spec(name);
    const Extents dims = make_extents(s.dim, {s.dim == 1 ? std::size_t{128} : std::size_t{16}});
    for (Method m : kAll) {
      CAPTURE(name);
      CAPTURE(to_string(m));
      GridBuffer a = filled(s, dims, m, 4, 0.0);
      const std::ptrdiff_t cx = 50 % static_cast<std::ptrdiff_t>(dims[0]);
      const std::ptrdiff_t cy = s.dim >= 2 ? 8 : 0, cz = s.dim >= 3 ? 8 : 0;
      a.set(cx, cy, cz, 1.0);
      GridBuffer b = a;
      for (int t = 1; t <= 3; ++t) {
        run_step(m, 4, a, b, s);
        std::swap(a, b);
        bool local = true;
        for (std::ptrdiff_t z = 0; z < static_cast<std::ptrdiff_t>(dims[2]); ++z)
          for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(dims[1]); ++y)
            for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(dims[0]); ++x) {
              const std::ptrdiff_t dist =
                  std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)});
              if (dist > t * s.order && a.get(x, y, z) != 0.0) local = false;
            }
        CHECK(local);
      }
    }
  }
}

TEST_CASE("load meters") {
  const StencilSpec s = make_stencil_spec("1d3p");
  for (int vl : {4, 8}) {
    const std::size_t n = 1024;
    CAPTURE(vl);
    Counters ml, ro, tr;
    GridBuffer a = seeded(s, {n, 1, 1}, Method::multiload, vl, 1), b = a;
    multiload_step(a, b, s, vl, &ml);
    CHECK(ml.vector_loads == 3 * n / vl);
    CHECK(ml.vector_stores == n / vl);
    CHECK(ml.point_updates == n);

    reorg_step(a, b, s, vl, &ro);
    CHECK(ro.vector_loads == n / vl);
    CHECK(ro.reorg_ops == 2 * 2 * n / vl);

    GridBuffer t = seeded(s, {n, 1, 1}, Method::transpose, vl, 1), u = t;
    transpose_layout_step(t, u, s, &tr);
    CHECK(tr.vector_loads == n / vl);
    CHECK(tr.point_updates == n);
    // Multiple loads per element versus one.
    CHECK(ml.vector_loads == 3 * tr.vector_loads);
  }
}

TEST_CASE("transpose reorganisation meter per vector set") {
  for (int vl : {4, 8}) {
    const std::size_t n = static_cast<std::size_t>(vl * vl * 10);
    const std::uint64_t sets = 10;
    Counters c3, c5;
    const StencilSpec s3 = make_stencil_spec("1d3p"), s5 = make_stencil_spec("1d5p");
    GridBuffer a = seeded(s3, {n, 1, 1}, Method::transpose, vl, 1), b = a;
    transpose_layout_step(a, b, s3, &c3);
    CHECK(c3.assembled_vectors == 2 * sets);
    CHECK(c3.reorg_ops == 4 * sets);
    GridBuffer p = seeded(s5, {n, 1, 1}, Method::transpose, vl, 1), q = p;
    transpose_layout_step(p, q, s5, &c5);
    CHECK(c5.assembled_vectors == 4 * sets);
    CHECK(c5.reorg_ops == 8 * sets);
  }
}

TEST_CASE("dlt boundary columns read across substreams") {
  // n = 28, vl = 4: seven columns. Column 1 depends on columns 0..2 only,
  // column 0 also on the shifted last column and the left halo.
  const StencilSpec s = make_stencil_spec("1d3p");
  GridBuffer nat = alloc_grid(s, {28, 1, 1}, Layout::natural(), 4);
  seed_uniform(nat, 8);
  GridBuffer d = to_dlt(nat, 4), out = d;
  dlt_step(d, out, s);
  const double* in = d.row(0, 0);
  const double* res = out.row(0, 0);
  for (int q = 0; q < 4; ++q) {
    const double expect = 0.25 * in[0 * 4 + q] + 0.5 * in[1 * 4 + q] + 0.25 * in[2 * 4 + q];
    CHECK(res[1 * 4 + q] == expect);
  }
  // Lane 0 of column 0 is natural x = 0 whose left neighbour is the halo.
  CHECK(res[0] == 0.25 * nat.get(-1) + 0.5 * nat.get(0) + 0.25 * nat.get(1));
  // Lane 1 of column 0 is natural x = 7; its left neighbour x = 6 is lane 0 of column 6.
  CHECK(res[1] == 0.25 * in[6 * 4 + 0] + 0.5 * in[0 * 4 + 1] + 0.25 * in[1 * 4 + 1]);
  CHECK(max_relative_error(from_dlt(out), [&] {
          GridBuffer o = nat;
          scalar_step(nat, o, s);
          return o;
        }()) == 0.0);
}

TEST_CASE("argument checking") {
  const StencilSpec s = make_stencil_spec("1d3p");
  GridBuffer a = alloc_grid(s, {64, 1, 1}, Layout::natural(), 4);
  GridBuffer b = alloc_grid(s, {32, 1, 1}, Layout::natural(), 4);
  GridBuffer t = alloc_grid(s, {64, 1, 1}, Layout::block_transpose(4), 4);
  CHECK_THROWS_AS(scalar_step(a, a, s), std::invalid_argument);
  CHECK_THROWS_AS(scalar_step(a, b, s), std::invalid_argument);
  GridBuffer t2 = t;
  CHECK_THROWS_AS(multiload_step(t, t2, s, 4), std::invalid_argument);
  GridBuffer a2 = a;
  CHECK_THROWS_AS(transpose_layout_step(a, a2, s), std::invalid_argument);
  CHECK_THROWS_AS(dlt_step(a, a2, s), std::invalid_argument);
  CHECK_THROWS_AS(run_step(Method::transpose, 8, t, t2, s), std::invalid_argument);
  CHECK_THROWS_AS(multiload_step(a, a2, s, 5), std::invalid_argument);
  CHECK_THROWS_AS(scalar_step(a, a2, make_stencil_spec("2d5p")), std::invalid_argument);
  Region bad = interior_region(a);
  bad.hi[0] = 65;
  CHECK_THROWS_AS(step_region(Method::scalar, 4, a, a2, s, bad), std::out_of_range);
  GridBuffer d = alloc_grid(s, {64, 1, 1}, Layout::dlt(4), 4), d2 = d;
  Region part = interior_region(d);
  part.hi[0] = 32;
  CHECK_THROWS_AS(step_region(Method::dlt, 4, d, d2, s, part), std::invalid_argument);
  // Too few columns per lane for the stencil reach.
  const StencilSpec s5 = make_stencil_spec("1d5p");
  GridBuffer tiny = alloc_grid(s5, {4, 1, 1}, Layout::dlt(4), 4), tiny2 = tiny;
  CHECK_THROWS_AS(dlt_step(tiny, tiny2, s5), std::invalid_argument);
}

TEST_CASE("region sweeps touch only the region") {
  const StencilSpec s = make_stencil_spec("2d9p");
  for (Method m : {Method::scalar, Method::multiload, Method::reorg, Method::transpose}) {
    CAPTURE(to_string(m));
    GridBuffer src = seeded(s, {70, 12, 1}, m, 4, 4);
    GridBuffer dst = src;
    for (auto& v : dst.raw()) v = -7.0;
    Region r;
    r.lo = {5, 2, 0};
    r.hi = {61, 9, 1};
    step_region(m, 4, src, dst, s, r);
    const ref::Dense want = ref::step(ref::to_dense(src), s);
    bool ok = true;
    for (std::ptrdiff_t y = dst.y_begin(); y < dst.y_end(); ++y)
      for (std::ptrdiff_t x = dst.x_begin(); x < dst.x_end(); ++x) {
        const bool inside = x >= 5 && x < 61 && y >= 2 && y < 9;
        ok = ok && (inside ? dst.get(x, y, 0) == want.at(x, y, 0) : dst.get(x, y, 0) == -7.0);
      }
    CHECK(ok);
  }
}

TEST_CASE("assemble_left and assemble_right") {
  using V = simd::Vec<4>;
  // Lanes labelled by character codes.
  const V prev_last = simd::from_array<V>({'W', 'X', 'Y', 'Z'});
  const V cur_last = simd::from_array<V>({'D', 'H', 'L', 'P'});
  CHECK(simd::to_array(assemble_left(prev_last, cur_last)) == std::array<double, 4>{'Z', 'D', 'H', 'L'});
  const V cur_first = simd::from_array<V>({'A', 'E', 'I', 'M'});
  const V next_first = simd::from_array<V>({'Q', 'U', 'Y', 'c'});
  CHECK(simd::to_array(assemble_right(cur_first, next_first)) == std::array<double, 4>{'E', 'I', 'M', 'Q'});
  const V c = V::broadcast(2.5);
  CHECK(simd::to_array(assemble_left(c, c)) == simd::to_array(c));
  CHECK(simd::to_array(assemble_right(c, c)) == simd::to_array(c));
}

TEST_CASE("assembled neighbours match the natural index map") {
  for (int vl : {4, 8}) {
    CAPTURE(vl);
    const StencilSpec s = make_stencil_spec("1d5p");
    const std::size_t n = static_cast<std::size_t>(vl * vl * 4);
    GridBuffer nat = alloc_grid(s, {n, 1, 1}, Layout::natural(), vl);
    // Label every cell with its natural coordinate.
    for (std::ptrdiff_t x = nat.x_begin(); x < nat.x_end(); ++x) nat.set(x, 0, 0, static_cast<double>(x));
    const GridBuffer t = to_block_transpose(nat, vl);
    for (std::size_t b = 0; b < 4; ++b) {
      const auto deps = gather_vs_deps(t, s, b);
      REQUIRE(deps.size() == 1);
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(b) * vl * vl;
      for (int i = 0; i < 2; ++i)
        for (int l = 0; l < vl; ++l) {
          // left[i] stands for row -(i+1): natural base + l*vl - (i+1).
          CHECK(deps[0].left[i][l] == static_cast<double>(base + l * vl - (i + 1)));
          // right[i] stands for row vl+i: natural base + l*vl + vl + i.
          CHECK(deps[0].right[i][l] == static_cast<double>(base + l * vl + vl + i));
        }
      // Across a block boundary the right neighbour of block b's last cell
      // is block b+1's first cell, and vice versa.
      if (b + 1 < 4) {
        const auto nxt = gather_vs_deps(t, s, b + 1);
        CHECK(deps[0].right[0][vl - 1] == nxt[0].rows.at(0, 0));
        CHECK(nxt[0].left[0][0] == deps[0].rows.at(vl - 1, vl - 1));
      }
    }
  }
}

TEST_CASE("vs_step") {
  const StencilSpec s = make_stencil_spec("1d3p");
  GridBuffer nat = alloc_grid(s, {64, 1, 1}, Layout::natural(), 4);

  SUBCASE("constant block stays constant") {
    for (auto& v : nat.raw()) v = 2.5;
    const GridBuffer t = to_block_transpose(nat, 4);
    const VectorSet vs = load_vector_set(t, 1);
    const VectorSet out = vs_step(vs, gather_vs_deps(t, s, 1), s);
    CHECK(out == vs);
  }
  SUBCASE("ramp is invariant") {
    for (std::ptrdiff_t x = nat.x_begin(); x < nat.x_end(); ++x) nat.set(x, 0, 0, static_cast<double>(x));
    const GridBuffer t = to_block_transpose(nat, 4);
    const VectorSet out = vs_step(load_vector_set(t, 0), gather_vs_deps(t, s, 0), s);
    for (int j = 0; j < 4; ++j)
      for (int l = 0; l < 4; ++l) CHECK(out.at(j, l) == l * 4 + j);
  }
  SUBCASE("random block equals the oracle") {
    for (const char* name : {"1d3p", "1d5p", "2d9p", "3d27p"}) {
      const StencilSpec sp = make_stencil_spec(name);
      for (int vl : {4, 8}) {
        std::vector<std::size_t> sizes{static_cast<std::size_t>(vl * vl * 3)};
        sizes.resize(static_cast<std::size_t>(sp.dim), 5);
        GridBuffer g = alloc_grid(sp, make_extents(sp.dim, sizes), Layout::natural(), vl);
        seed_uniform(g, 21);
        const ref::Dense want = ref::step(ref::to_dense(g), sp);
        const GridBuffer t = to_block_transpose(g, vl);
        const std::ptrdiff_t y = sp.dim >= 2 ? 2 : 0, z = sp.dim >= 3 ? 3 : 0;
        for (std::size_t b = 0; b < 3; ++b) {
          const VectorSet out = vs_step(load_vector_set(t, b, y, z), gather_vs_deps(t, sp, b, y, z), sp);
          for (int j = 0; j < vl; ++j)
            for (int l = 0; l < vl; ++l)
              CHECK(out.at(j, l) == want.at(static_cast<std::ptrdiff_t>(b) * vl * vl + l * vl + j, y, z));
        }
      }
    }
  }
  SUBCASE("missing dependencies are rejected") {
    const GridBuffer t = to_block_transpose(nat, 4);
    auto deps = gather_vs_deps(t, s, 1);
    deps[0].left.clear();
    CHECK_THROWS_AS(vs_step(load_vector_set(t, 1), deps, s), std::invalid_argument);
    CHECK_THROWS_AS(vs_step(load_vector_set(t, 1), {}, s), std::invalid_argument);
    const StencilSpec s2 = make_stencil_spec("2d5p");
    GridBuffer g2 = alloc_grid(s2, {16, 4, 1}, Layout::block_transpose(4), 4);
    auto d2 = gather_vs_deps(g2, s2, 0, 1);
    d2.erase(d2.begin());  // drop the y-1 row
    CHECK_THROWS_AS(vs_step(load_vector_set(g2, 0, 1), d2, s2), std::invalid_argument);
  }
}
