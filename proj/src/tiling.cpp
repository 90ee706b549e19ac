#include "tstencil/tiling.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "tstencil/timejam.hpp"

namespace tstencil {

std::string to_string(TileKind kind) {
  switch (kind) {
    case TileKind::shrink: return "shrink";
    case TileKind::expand: return "expand";
    case TileKind::full: return "full";
  }
  return "?";
}

Region Tile::region_at(int step) const {
  Region r;
  for (int d = 0; d < 3; ++d) {
    const std::ptrdiff_t a = anchor[d];
    const std::ptrdiff_t rt = static_cast<std::ptrdiff_t>(order) * step;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(extent[d]);
    std::ptrdiff_t lo = 0, hi = 0;
    switch (kind[d]) {
      case TileKind::shrink:
        lo = a + rt;
        hi = a + block - rt + 1;
        break;
      case TileKind::expand:
        lo = std::max(a - rt + 1, a - block / 2);
        hi = std::min(a + rt, a + block / 2);
        break;
      case TileKind::full:
        lo = a;
        hi = a + block;
        break;
    }
    r.lo[d] = std::clamp<std::ptrdiff_t>(lo, 0, n);
    r.hi[d] = std::clamp<std::ptrdiff_t>(hi, 0, n);
    if (r.hi[d] < r.lo[d]) r.hi[d] = r.lo[d];
  }
  return r;
}

std::array<int, 3> Tile::growth() const {
  std::array<int, 3> g{};
  for (int d = 0; d < 3; ++d) {
    g[d] = kind[d] == TileKind::shrink ? -order : kind[d] == TileKind::expand ? order : 0;
  }
  return g;
}

std::size_t TileSchedule::tile_count() const {
  std::size_t c = 0;
  for (const auto& s : stages) c += s.size();
  return c;
}

namespace {

bool ever_nonempty(const Tile& t) {
  for (int s = 1; s <= t.height; ++s)
    if (!t.region_at(s).empty()) return true;
  return false;
}

void check_dim(int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3, got " + std::to_string(dim));
}

}  // namespace

TileSchedule build_tessellation(int dim, const Extents& n, std::ptrdiff_t block, int height, int order) {
  check_dim(dim);
  if (order < 1) throw std::invalid_argument("stencil order must be positive");
  if (height < 0) throw std::invalid_argument("tile height T_b must be >= 0, got " + std::to_string(height));
  if (block < 1) throw std::invalid_argument("tile block must be positive");
  const std::ptrdiff_t need = 2 * static_cast<std::ptrdiff_t>(order) * height;
  if (block < need) {
    throw std::invalid_argument("tile block B = " + std::to_string(block) + " violates B >= 2*r*T_b = " +
                                std::to_string(need));
  }
  for (int d = 0; d < dim; ++d) {
    if (n[d] == 0 || static_cast<std::ptrdiff_t>(n[d]) % block != 0) {
      throw std::invalid_argument("tile block B = " + std::to_string(block) + " does not divide extent " +
                                  std::to_string(n[d]) + " of dimension " + std::to_string(d));
    }
  }

  TileSchedule s;
  s.dim = dim;
  s.order = order;
  s.height = height;
  s.block = block;
  s.extents = n;
  s.stages.resize(static_cast<std::size_t>(dim + 1));

  // Per dimension: every shrink anchor and every expand centre.
  std::array<std::vector<std::pair<TileKind, std::ptrdiff_t>>, 3> choices;
  for (int d = 0; d < 3; ++d) {
    if (d >= dim) {
      choices[d].push_back({TileKind::full, 0});
      continue;
    }
    const std::ptrdiff_t nd = static_cast<std::ptrdiff_t>(n[d]);
    for (std::ptrdiff_t a = 0; a < nd; a += block) choices[d].push_back({TileKind::shrink, a});
    for (std::ptrdiff_t c = 0; c <= nd; c += block) choices[d].push_back({TileKind::expand, c});
  }
  for (const auto& cz : choices[2])
    for (const auto& cy : choices[1])
      for (const auto& cx : choices[0]) {
        Tile t;
        t.kind = {cx.first, cy.first, cz.first};
        t.anchor = {cx.second, cy.second, cz.second};
        t.extent = n;
        t.block = block;
        t.order = order;
        t.height = height;
        for (int d = 0; d < 3; ++d)
          if (t.kind[d] == TileKind::expand) ++t.stage;
        if (!ever_nonempty(t)) continue;
        s.stages[static_cast<std::size_t>(t.stage)].push_back(t);
      }
  if (height == 0) s.notes.push_back("tile height 0: the schedule performs no updates");
  return s;
}

TileSchedule build_tessellation_1d(std::size_t n, std::ptrdiff_t block, int height, int order) {
  return build_tessellation(1, Extents{n, 1, 1}, block, height, order);
}

TileSchedule build_tessellation_2d(const Extents& n, std::ptrdiff_t block, int height, int order) {
  return build_tessellation(2, n, block, height, order);
}

TileSchedule build_spatial_blocking(int dim, const Extents& n, std::ptrdiff_t block, int order) {
  check_dim(dim);
  if (block < 1) throw std::invalid_argument("tile block must be positive");
  TileSchedule s;
  s.dim = dim;
  s.order = order;
  s.height = 1;
  s.block = block;
  s.extents = n;
  s.spatial = true;
  s.stages.resize(1);
  std::array<std::ptrdiff_t, 3> step{1, 1, 1};
  for (int d = 0; d < dim; ++d) step[d] = block;
  for (std::ptrdiff_t z = 0; z < static_cast<std::ptrdiff_t>(n[2]); z += step[2])
    for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(n[1]); y += step[1])
      for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(n[0]); x += step[0]) {
        Tile t;
        t.anchor = {x, y, z};
        t.extent = n;
        t.block = block;
        t.order = order;
        t.height = 1;
        s.stages[0].push_back(t);
      }
  s.notes.push_back("spatial blocking: one step per cycle, every tile independent");
  return s;
}

namespace {

std::string point_name(std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ", " + std::to_string(z) + ")";
}

template <class F>
void for_each_point(const Region& r, F&& f) {
  for (std::ptrdiff_t z = r.lo[2]; z < r.hi[2]; ++z)
    for (std::ptrdiff_t y = r.lo[1]; y < r.hi[1]; ++y)
      for (std::ptrdiff_t x = r.lo[0]; x < r.hi[0]; ++x) f(x, y, z);
}

}  // namespace

CountMap update_count_map(const TileSchedule& schedule, int stages) {
  const Extents& n = schedule.extents;
  const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(n[0]), ny = static_cast<std::ptrdiff_t>(n[1]),
                       nz = static_cast<std::ptrdiff_t>(n[2]);
  const std::size_t total = n[0] * n[1] * n[2];
  auto index = [&](std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
    return static_cast<std::size_t>((z * ny + y) * nx + x);
  };
  // Reads are checked against a box of radius r, which covers star and box shapes.
  std::vector<std::array<std::ptrdiff_t, 3>> nbrs;
  const std::ptrdiff_t r = schedule.order;
  std::array<std::ptrdiff_t, 3> reach{0, 0, 0};
  for (int d = 0; d < schedule.dim; ++d) reach[d] = r;
  for (std::ptrdiff_t dz = -reach[2]; dz <= reach[2]; ++dz)
    for (std::ptrdiff_t dy = -reach[1]; dy <= reach[1]; ++dy)
      for (std::ptrdiff_t dx = -reach[0]; dx <= reach[0]; ++dx) nbrs.push_back({dx, dy, dz});
  auto for_each_nbr = [&](std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z, auto&& f) {
    for (const auto& o : nbrs) {
      const std::ptrdiff_t qx = x + o[0], qy = y + o[1], qz = z + o[2];
      if (qx < 0 || qy < 0 || qz < 0 || qx >= nx || qy >= ny || qz >= nz) continue;
      f(qx, qy, qz);
    }
  };

  CountMap map;
  map.extents = n;
  map.counts.assign(total, 0);
  std::vector<int>& level = map.counts;
  const int h = schedule.height;
  const std::size_t limit =
      stages < 0 ? schedule.stages.size() : std::min(schedule.stages.size(), static_cast<std::size_t>(stages));

  std::vector<int> writer(2 * total, -1);
  for (std::size_t s = 0; s < limit; ++s) {
    const auto& tiles = schedule.stages[s];
    std::fill(writer.begin(), writer.end(), -1);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      for (int t = 1; t <= h; ++t) {
        for_each_point(tiles[i].region_at(t), [&](std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
          int& w = writer[2 * index(x, y, z) + static_cast<std::size_t>(t % 2)];
          if (w >= 0 && w != static_cast<int>(i)) {
            throw std::logic_error("stage " + std::to_string(s) + ": tiles " + std::to_string(w) + " and " +
                                   std::to_string(i) + " both write " + point_name(x, y, z) + " in buffer " +
                                   std::to_string(t % 2));
          }
          w = static_cast<int>(i);
        });
      }
    }
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      for (int t = 1; t <= h; ++t) {
        const std::size_t parity = static_cast<std::size_t>((t - 1) % 2);
        for_each_point(tiles[i].region_at(t), [&](std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
          for_each_nbr(x, y, z, [&](std::ptrdiff_t qx, std::ptrdiff_t qy, std::ptrdiff_t qz) {
            const int w = writer[2 * index(qx, qy, qz) + parity];
            if (w >= 0 && w != static_cast<int>(i)) {
              throw std::logic_error("stage " + std::to_string(s) + ": tile " + std::to_string(i) + " reads " +
                                     point_name(qx, qy, qz) + " in buffer " + std::to_string(parity) +
                                     " while tile " + std::to_string(w) + " writes it");
            }
          });
        });
      }
    }
    for (const Tile& tile : tiles) {
      for (int t = 1; t <= h; ++t) {
        for_each_point(tile.region_at(t), [&](std::ptrdiff_t x, std::ptrdiff_t y, std::ptrdiff_t z) {
          int& lv = level[index(x, y, z)];
          if (lv != t - 1) {
            throw std::logic_error("point " + point_name(x, y, z) + " is at level " + std::to_string(lv) +
                                   " when step " + std::to_string(t) + " updates it");
          }
          for_each_nbr(x, y, z, [&](std::ptrdiff_t qx, std::ptrdiff_t qy, std::ptrdiff_t qz) {
            const int q = level[index(qx, qy, qz)];
            if (q != t - 1 && q != t) {
              throw std::logic_error("step " + std::to_string(t) + " at " + point_name(x, y, z) +
                                     " reads neighbour " + point_name(qx, qy, qz) + " at level " +
                                     std::to_string(q) + ", needs " + std::to_string(t - 1));
            }
          });
          lv = t;
        });
      }
    }
  }
  if (limit == schedule.stages.size()) {
    for (std::ptrdiff_t z = 0; z < nz; ++z)
      for (std::ptrdiff_t y = 0; y < ny; ++y)
        for (std::ptrdiff_t x = 0; x < nx; ++x)
          if (level[index(x, y, z)] != h) {
            throw std::logic_error("point " + point_name(x, y, z) + " ends at level " +
                                   std::to_string(level[index(x, y, z)]) + ", expected " + std::to_string(h));
          }
  }
  return map;
}

namespace {

std::string region_name(const Region& r, int dim) {
  std::string s;
  for (int d = 0; d < dim; ++d) {
    if (d) s += " x ";
    s += "[" + std::to_string(r.lo[d]) + ", " + std::to_string(r.hi[d]) + ")";
  }
  return s;
}

Region intersect(const Region& a, const Region& b) {
  Region r;
  for (int d = 0; d < 3; ++d) {
    r.lo[d] = std::max(a.lo[d], b.lo[d]);
    r.hi[d] = std::max(r.lo[d], std::min(a.hi[d], b.hi[d]));
  }
  return r;
}

Region with_x(Region r, std::ptrdiff_t lo, std::ptrdiff_t hi) {
  r.lo[0] = lo;
  r.hi[0] = std::max(lo, hi);
  return r;
}

std::ptrdiff_t round_up(std::ptrdiff_t v, std::ptrdiff_t m) { return (v + m - 1) / m * m; }
std::ptrdiff_t round_down(std::ptrdiff_t v, std::ptrdiff_t m) { return v / m * m; }

// Whole vl*vl blocks [first, last) inside both steps of a jammed pair.
std::pair<std::ptrdiff_t, std::ptrdiff_t> jam_blocks(const Tile& tile, int t, int vl) {
  const std::ptrdiff_t B = static_cast<std::ptrdiff_t>(vl) * vl;
  const Region i = intersect(tile.region_at(t), tile.region_at(t + 1));
  if (i.empty()) return {0, 0};
  return {round_up(i.lo[0], B) / B, round_down(i.hi[0], B) / B};
}

}  // namespace

std::string dump_schedule(const TileSchedule& schedule, const TiledRunOptions* run) {
  std::ostringstream os;
  os << (schedule.spatial ? "spatial blocking" : "tessellation") << ": dim " << schedule.dim << ", extents";
  for (int d = 0; d < schedule.dim; ++d) os << (d ? " x " : " ") << schedule.extents[d];
  os << ", B " << schedule.block << ", T_b " << schedule.height << ", r " << schedule.order << ", "
     << schedule.stages.size() << " stage(s), " << schedule.tile_count() << " tile(s)\n";
  for (std::size_t s = 0; s < schedule.stages.size(); ++s) {
    const auto& tiles = schedule.stages[s];
    os << "stage " << s << ": " << tiles.size() << " tile(s)";
    if (!tiles.empty()) {
      const Tile& t = tiles[tiles.size() / 2];
      os << ", e.g.";
      for (int d = 0; d < schedule.dim; ++d) os << ' ' << to_string(t.kind[d]) << '@' << t.anchor[d];
      os << ": step 1 " << region_name(t.region_at(1), schedule.dim);
      if (t.height > 1) os << ", step " << t.height << ' ' << region_name(t.region_at(t.height), schedule.dim);
    }
    os << '\n';
  }
  for (const auto& note : schedule.notes) os << "note: " << note << '\n';
  if (run && run->jam_k == 2 && schedule.dim == 1) {
    std::size_t pairs = 0, fallback = 0;
    for (const auto& stage : schedule.stages)
      for (const Tile& t : stage)
        for (int step = 1; step + 1 <= t.height; step += 2) {
          ++pairs;
          const auto [fb, lb] = jam_blocks(t, step, run->vl);
          if (fb >= lb) ++fallback;
        }
    if (schedule.height % 2 == 1) {
      os << "note: jam k=2 with odd T_b: the last step of every tile runs unjammed\n";
    }
    if (fallback > 0) {
      os << "note: jam k=2 fallback: " << fallback << " of " << pairs
         << " step pairs hold no whole vl*vl block and run as single steps\n";
    }
  }
  return os.str();
}

namespace {

// Gathers the cells a row segment reads through the layout map, updates the
// segment in natural order and scatters the results.
void gathered_segment(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, std::ptrdiff_t x0,
                      std::ptrdiff_t x1, std::ptrdiff_t y, std::ptrdiff_t z, Counters* counters) {
  if (x0 >= x1) return;
  const auto groups = row_groups(spec);
  const int r = spec.order;
  const std::ptrdiff_t w = x1 - x0 + 2 * r;
  std::vector<double> scratch(groups.size() * static_cast<std::size_t>(w));
  std::map<std::pair<int, int>, std::size_t> group_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    group_of[{groups[g].dy, groups[g].dz}] = g;
    double* s = scratch.data() + g * static_cast<std::size_t>(w);
    for (std::ptrdiff_t x = x0 - r; x < x1 + r; ++x) s[x - x0 + r] = src.get(x, y + groups[g].dy, z + groups[g].dz);
  }
  struct Flat {
    const double* row;
    int dx;
    double w;
  };
  std::vector<Flat> taps;
  for (const Tap& t : spec.weights) {
    const std::size_t g = group_of.at({t.offset[1], t.offset[2]});
    taps.push_back({scratch.data() + g * static_cast<std::size_t>(w) + r - x0, t.offset[0], t.weight});
  }
  for (std::ptrdiff_t x = x0; x < x1; ++x) {
    double acc = taps[0].w * taps[0].row[x + taps[0].dx];
    for (std::size_t t = 1; t < taps.size(); ++t) acc += taps[t].w * taps[t].row[x + taps[t].dx];
    dst.set(x, y, z, acc);
  }
  if (counters) {
    counters->scalar_loads += groups.size() * static_cast<std::uint64_t>(w);
    counters->scalar_stores += static_cast<std::uint64_t>(x1 - x0);
    counters->point_updates += static_cast<std::uint64_t>(x1 - x0);
  }
}

// The straddled parts of a region's x range: [lo, first whole block) and
// [end of last whole block, hi).
std::array<std::pair<std::ptrdiff_t, std::ptrdiff_t>, 2> partial_segments(std::ptrdiff_t lo, std::ptrdiff_t hi,
                                                                          std::ptrdiff_t B) {
  const std::ptrdiff_t a = round_up(lo, B), b = round_down(hi, B);
  if (a >= b) return {{{lo, hi}, {hi, hi}}};
  return {{{lo, a}, {b, hi}}};
}

void boundary_region(const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, const Region& region,
                     Counters* counters) {
  if (region.empty()) return;
  const std::ptrdiff_t B = static_cast<std::ptrdiff_t>(src.layout().vl) * src.layout().vl;
  const auto segs = partial_segments(region.lo[0], region.hi[0], B);
  for (std::ptrdiff_t z = region.lo[2]; z < region.hi[2]; ++z)
    for (std::ptrdiff_t y = region.lo[1]; y < region.hi[1]; ++y)
      for (const auto& [a, b] : segs) gathered_segment(src, dst, spec, a, b, y, z, counters);
}

// One step of a region: whole blocks vectorised, straddled parts gathered.
void tile_region_step(const TiledRunOptions& opt, const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec,
                      const Region& region, Counters* counters) {
  if (region.empty()) return;
  if (opt.method != Method::transpose) {
    step_region(opt.method, opt.vl, src, dst, spec, region, counters);
    return;
  }
  const std::ptrdiff_t B = static_cast<std::ptrdiff_t>(opt.vl) * opt.vl;
  const std::ptrdiff_t a = round_up(region.lo[0], B), b = round_down(region.hi[0], B);
  if (a < b) step_region(Method::transpose, opt.vl, src, dst, spec, with_x(region, a, b), counters);
  boundary_region(src, dst, spec, region, counters);
}

void run_tile(const Tile& tile, const std::array<GridBuffer*, 2>& buf, int base, const StencilSpec& spec,
              const TiledRunOptions& opt, Counters& c) {
  auto at = [&](int level) { return buf[static_cast<std::size_t>(level % 2)]; };
  int t = 1;
  while (t <= tile.height) {
    GridBuffer& src = *at(base + t - 1);
    GridBuffer& mid = *at(base + t);
    if (opt.jam_k == 2 && t + 1 <= tile.height) {
      const auto [fb, lb] = jam_blocks(tile, t, opt.vl);
      if (fb < lb) {
        const std::ptrdiff_t B = static_cast<std::ptrdiff_t>(opt.vl) * opt.vl;
        const std::ptrdiff_t ja = fb * B, jb = lb * B;
        const Region r0 = tile.region_at(t), r1 = tile.region_at(t + 1);
        tile_region_step(opt, src, mid, spec, with_x(r0, r0.lo[0], ja), &c);
        tile_region_step(opt, src, mid, spec, with_x(r0, jb, r0.hi[0]), &c);
        JamBounds bounds;
        bounds.first_block = static_cast<std::size_t>(fb);
        bounds.last_block = static_cast<std::size_t>(lb);
        bounds.edge = {&src, &mid};
        bounds.mid = &mid;
        jam_run(src, spec, 2, bounds, &c);
        tile_region_step(opt, mid, src, spec, with_x(r1, r1.lo[0], ja), &c);
        tile_region_step(opt, mid, src, spec, with_x(r1, jb, r1.hi[0]), &c);
        t += 2;
        continue;
      }
    }
    tile_region_step(opt, src, mid, spec, tile.region_at(t), &c);
    ++t;
  }
}

void run_stage(const std::vector<Tile>& tiles, const std::array<GridBuffer*, 2>& buf, int base,
               const StencilSpec& spec, const TiledRunOptions& opt, Counters& total) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(opt.workers), tiles.size());
  if (workers <= 1) {
    for (const Tile& t : tiles) run_tile(t, buf, base, spec, opt, total);
    return;
  }
  std::vector<Counters> counts(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < tiles.size(); i += workers) run_tile(tiles[i], buf, base, spec, opt, counts[w]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& c : counts) total += c;
}

TileSchedule with_height(const TileSchedule& s, int height) {
  if (s.spatial || height == s.height) return s;
  return build_tessellation(s.dim, s.extents, s.block, height, s.order);
}

}  // namespace

void boundary_vs_pass(const Tile& tile, const GridBuffer& src, GridBuffer& dst, const StencilSpec& spec, int step,
                      Counters* counters) {
  if (src.layout().kind != LayoutKind::block_transpose || !(src.layout() == dst.layout()) || !src.same_shape(dst)) {
    throw std::invalid_argument("boundary_vs_pass needs two block_transpose grids of the same shape");
  }
  if (&src == &dst) throw std::invalid_argument("boundary_vs_pass: src and dst must be distinct");
  boundary_region(src, dst, spec, tile.region_at(step), counters);
}

std::vector<StraddleRun> straddle_runs(const Tile& tile, int vl) {
  const std::ptrdiff_t B = static_cast<std::ptrdiff_t>(vl) * vl;
  std::map<std::ptrdiff_t, std::vector<StraddleRun>> runs;
  for (int t = 1; t <= tile.height; ++t) {
    const Region r = tile.region_at(t);
    if (r.empty()) continue;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(tile.extent[0]);
    std::vector<std::ptrdiff_t> cut;
    if (r.lo[0] % B != 0 && r.lo[0] > 0) cut.push_back(r.lo[0] / B);
    if (r.hi[0] % B != 0 && r.hi[0] < n && (cut.empty() || cut[0] != (r.hi[0] - 1) / B)) {
      cut.push_back((r.hi[0] - 1) / B);
    }
    for (std::ptrdiff_t b : cut) {
      auto& v = runs[b];
      if (!v.empty() && v.back().last_step == t - 1) v.back().last_step = t;
      else v.push_back({b, t, t});
    }
  }
  std::vector<StraddleRun> out;
  for (auto& [b, v] : runs) out.insert(out.end(), v.begin(), v.end());
  return out;
}

void run_tiled(GridBuffer& grid, const StencilSpec& spec, const TileSchedule& schedule, int steps,
               const TiledRunOptions& options, Counters* counters) {
  if (options.method == Method::dlt) {
    throw std::invalid_argument("dlt cannot be tiled: its vectors span the whole unit-stride row");
  }
  if (grid.dim() != spec.dim || schedule.dim != spec.dim) {
    throw std::invalid_argument("schedule, grid and stencil dimensions differ");
  }
  if (schedule.extents != grid.extents()) throw std::invalid_argument("schedule extents differ from the grid's");
  if (schedule.order < spec.order) {
    throw std::invalid_argument("schedule built for order " + std::to_string(schedule.order) +
                                " cannot run a stencil of order " + std::to_string(spec.order));
  }
  if (!(grid.layout() == layout_for(options.method, options.vl))) {
    throw std::invalid_argument("grid layout " + to_string(grid.layout()) + " does not suit method " +
                                to_string(options.method));
  }
  if (options.workers < 1) throw std::invalid_argument("worker count must be positive");
  if (options.jam_k != 1 && options.jam_k != 2) {
    throw std::invalid_argument("jam depth k must be 1 or 2, got " + std::to_string(options.jam_k));
  }
  if (options.jam_k == 2) {
    if (options.method != Method::transpose) throw std::invalid_argument("jam depth 2 needs the transpose method");
    if (spec.dim != 1) throw std::invalid_argument("jam depth 2 supports one-dimensional stencils only");
    check_register_budget(2, options.vl, spec);
  }
  if (steps < 0) throw std::invalid_argument("step count must be >= 0");
  if (steps == 0) return;
  if (schedule.height < 1) throw std::invalid_argument("a schedule with T_b = 0 cannot advance the grid");

  GridBuffer scratch = grid;
  const std::array<GridBuffer*, 2> buf{&grid, &scratch};
  Counters total;
  auto run_cycle = [&](const TileSchedule& s, int base) {
    for (const auto& stage : s.stages) run_stage(stage, buf, base, spec, options, total);
  };
  const int cycles = steps / schedule.height;
  const int rest = steps % schedule.height;
  int level = 0;
  for (int i = 0; i < cycles; ++i, level += schedule.height) run_cycle(schedule, level);
  if (rest > 0) run_cycle(with_height(schedule, rest), level);
  if (steps % 2 == 1) std::swap(grid, scratch);
  if (counters) *counters += total;
}

}  // namespace tstencil
