#include "tstencil/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "tstencil/tiling.hpp"
#include "tstencil/timejam.hpp"
#include "tstencil/transpose.hpp"

namespace tstencil {

namespace {

// Oracle runs are refused above this many point updates.
constexpr double kOracleBudget = 2e9;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::size_t default_size(int dim) { return dim == 1 ? 16384 : dim == 2 ? 256 : 64; }

Extents extents_for(const BenchConfig& cfg, const StencilSpec& spec) {
  std::vector<std::size_t> sizes = cfg.size;
  if (sizes.empty()) sizes.assign(1, default_size(spec.dim));
  if (sizes.size() == 1) sizes.assign(static_cast<std::size_t>(spec.dim), sizes[0]);
  if (sizes.size() != static_cast<std::size_t>(spec.dim)) {
    throw UsageError("--size takes 1 or " + std::to_string(spec.dim) + " extents for " + spec.name + ", got " +
                     std::to_string(sizes.size()));
  }
  return make_extents(spec.dim, sizes);
}

TileSchedule schedule_for(const BenchConfig& cfg, const StencilSpec& spec, const Extents& n) {
  if (spec.dim == 3) return build_spatial_blocking(3, n, cfg.block, spec.order);
  return build_tessellation(spec.dim, n, cfg.block, cfg.tile_height, spec.order);
}

TiledRunOptions tiled_options(const BenchConfig& cfg) {
  TiledRunOptions o;
  o.method = cfg.method;
  o.vl = cfg.vl;
  o.jam_k = cfg.jam_k;
  o.workers = cfg.threads;
  return o;
}

GridBuffer to_method_layout(const GridBuffer& natural, Method m, int vl) {
  switch (layout_for(m, vl).kind) {
    case LayoutKind::block_transpose: return to_block_transpose(natural, vl);
    case LayoutKind::dlt: return to_dlt(natural, vl);
    case LayoutKind::natural: break;
  }
  return natural;
}

GridBuffer to_natural(const GridBuffer& g) {
  switch (g.layout().kind) {
    case LayoutKind::block_transpose: return from_block_transpose(g);
    case LayoutKind::dlt: return from_dlt(g);
    case LayoutKind::natural: break;
  }
  return g;
}

// Advances a grid in the method's layout.
void advance(GridBuffer& grid, const StencilSpec& spec, const BenchConfig& cfg, const TileSchedule* schedule,
             int steps, Counters* counters) {
  if (schedule) {
    run_tiled(grid, spec, *schedule, steps, tiled_options(cfg), counters);
    return;
  }
  if (cfg.jam_k == 2) {
    jam_sweep(grid, spec, 2, steps, counters);
    return;
  }
  GridBuffer other = grid;
  for (int t = 0; t < steps; ++t) {
    run_step(cfg.method, cfg.vl, grid, other, spec, counters);
    std::swap(grid, other);
  }
}

std::string size_text(const Extents& n, int dim) {
  std::string s;
  for (int d = 0; d < dim; ++d) s += (d ? "x" : "") + std::to_string(n[d]);
  return s;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, 'x')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("--size expects extents like 16384 or 256x256, got '" + text + "'");
    }
    out.push_back(static_cast<std::size_t>(std::stoull(part)));
  }
  if (out.empty() || text.back() == 'x') {
    throw UsageError("--size expects extents like 16384 or 256x256, got '" + text + "'");
  }
  return out;
}

}  // namespace

void validate_config(const BenchConfig& cfg) {
  StencilSpec spec;
  try {
    spec = make_stencil_spec(cfg.stencil);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (cfg.vl != 4 && cfg.vl != 8) throw UsageError("--vl must be 4 or 8, got " + std::to_string(cfg.vl));
  if (cfg.steps < 0) throw UsageError("--steps must be >= 0");
  if (cfg.threads < 1) throw UsageError("--threads must be >= 1");
  if (cfg.jam_k != 1 && cfg.jam_k != 2) throw UsageError("--jam-k must be 1 or 2, got " + std::to_string(cfg.jam_k));
  const Extents n = extents_for(cfg, spec);
  for (int d = 0; d < spec.dim; ++d)
    if (n[d] == 0) throw UsageError("--size extents must be positive");
  if (cfg.jam_k == 2) {
    if (cfg.method == Method::dlt) {
      throw UsageError("--method dlt conflicts with --jam-k 2: time jamming runs on the block-transposed layout");
    }
    if (cfg.method != Method::transpose) {
      throw UsageError("--method " + to_string(cfg.method) + " conflicts with --jam-k 2: only transpose jams");
    }
    if (spec.dim != 1) throw UsageError("--jam-k 2 conflicts with " + spec.name + ": time jamming is 1D only");
    if (cfg.steps % 2 != 0) throw UsageError("--steps must be divisible by --jam-k 2");
  }
  if (cfg.block == 0) {
    if (cfg.tile_height != 0) throw UsageError("--tile-height needs --block");
    if (cfg.threads != 1) throw UsageError("--threads needs --block: untiled sweeps run on one thread");
    return;
  }
  if (cfg.block < 0) throw UsageError("--block must be positive");
  if (cfg.method == Method::dlt) {
    throw UsageError("--method dlt conflicts with --block: dlt vectors span whole rows and cannot be tiled");
  }
  if (spec.dim == 3) {
    if (cfg.tile_height > 1) {
      throw UsageError("3D presets run spatial blocks with tile height 1, got --tile-height " +
                       std::to_string(cfg.tile_height));
    }
  } else if (cfg.tile_height < 1) {
    throw UsageError("--block needs --tile-height >= 1 for " + spec.name);
  }
  try {
    schedule_for(cfg, spec, n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::optional<BenchConfig> parse_cli(int argc, const char* const* argv, std::ostream& out) {
  BenchConfig cfg;
  std::string method = to_string(cfg.method);
  std::string size;
  CLI::App app{"Vectorised stencil sweeps with temporal blocking"};
  app.require_subcommand(1, 1);
  CLI::App* run = app.add_subcommand("run", "time a configuration; CSV to --csv or stdout");
  CLI::App* ver = app.add_subcommand("verify", "compare a configuration with the scalar oracle; exit 1 on failure");
  CLI::App* plan = app.add_subcommand("plan", "print the shuffle plan and the tile schedule");
  for (CLI::App* sub : {run, ver, plan}) {
    sub->add_option("--stencil", cfg.stencil, "preset")
        ->check(CLI::IsMember(preset_names()))
        ->capture_default_str();
    sub->add_option("--size", size, "extents, e.g. 16384 or 256x256 (default 16384 / 256 / 64 per dimension)");
    sub->add_option("--steps", cfg.steps, "time steps T")->capture_default_str();
    sub->add_option("--method", method, "kernel")->check(CLI::IsMember(method_names()))->capture_default_str();
    sub->add_option("--jam-k", cfg.jam_k, "time levels per load/store (1 or 2)")->capture_default_str();
    sub->add_option("--vl", cfg.vl, "vector length in doubles (4 or 8)")->capture_default_str();
    sub->add_option("--block", cfg.block, "tile block B; 0 runs untiled sweeps")->capture_default_str();
    sub->add_option("--tile-height", cfg.tile_height, "tile time height T_b")->capture_default_str();
    sub->add_option("--threads", cfg.threads, "worker threads for tiles")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "grid seed")->capture_default_str();
    sub->add_option("--csv", cfg.csv, "CSV output path");
    sub->add_option("--tolerance", cfg.tolerance, "verify threshold (default 1e-13 * steps)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, out, out);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  cfg.command = ver->parsed() ? Command::verify : plan->parsed() ? Command::plan : Command::run;
  cfg.method = parse_method(method);
  cfg.size = size.empty() ? std::vector<std::size_t>{} : parse_sizes(size);
  validate_config(cfg);
  return cfg;
}

double tolerance_for(const BenchConfig& cfg) {
  return cfg.tolerance >= 0 ? cfg.tolerance : 1e-13 * std::max(cfg.steps, 1);
}

BenchResult run_benchmark(const BenchConfig& cfg, bool with_oracle) {
  validate_config(cfg);
  const StencilSpec spec = make_stencil_spec(cfg.stencil);
  BenchResult res;
  res.config = cfg;
  res.extents = extents_for(cfg, spec);
  const double points = static_cast<double>(res.extents[0] * res.extents[1] * res.extents[2]);
  if (with_oracle && points * cfg.steps > kOracleBudget) {
    throw std::invalid_argument("problem too large for the oracle: " + std::to_string(points * cfg.steps) +
                                " point updates exceed " + std::to_string(kOracleBudget));
  }

  GridBuffer natural = alloc_grid(spec, res.extents, Layout::natural(), cfg.vl);
  seed_uniform(natural, cfg.seed);

  std::optional<TileSchedule> schedule;
  if (cfg.block > 0) schedule = schedule_for(cfg, spec, res.extents);
  res.tile_height = schedule ? schedule->height : 0;
  const TileSchedule* sched = schedule ? &*schedule : nullptr;

  {
    GridBuffer warm = to_method_layout(natural, cfg.method, cfg.vl);
    advance(warm, spec, cfg, sched, std::min(cfg.steps, cfg.jam_k), nullptr);
  }

  auto t0 = Clock::now();
  GridBuffer grid = to_method_layout(natural, cfg.method, cfg.vl);
  double layout = since(t0);
  t0 = Clock::now();
  advance(grid, spec, cfg, sched, cfg.steps, &res.counters);
  const double stepping = since(t0);
  t0 = Clock::now();
  GridBuffer result = to_natural(grid);
  layout += since(t0);

  res.layout_seconds = layout;
  res.seconds = stepping + layout;
  res.flops = res.counters.point_updates * static_cast<std::uint64_t>(flops_per_point(spec));
  res.gflops = static_cast<double>(res.flops) / std::max(res.seconds, 1e-9) / 1e9;

  if (with_oracle) {
    GridBuffer other = natural;
    for (int t = 0; t < cfg.steps; ++t) {
      scalar_step(natural, other, spec);
      std::swap(natural, other);
    }
    res.max_rel_err = max_relative_error(result, natural);
  }
  return res;
}

double verify(const BenchConfig& cfg) { return *run_benchmark(cfg, true).max_rel_err; }

std::string csv_header() {
  return "stencil,method,vl,jam_k,size,steps,block,tile_height,threads,seconds,layout_seconds,gflops,max_rel_err,"
         "loads,stores,reorg_ops";
}

std::string csv_row(const BenchResult& r) {
  const BenchConfig& c = r.config;
  const int dim = make_stencil_spec(c.stencil).dim;
  std::ostringstream os;
  os << std::setprecision(17);
  os << c.stencil << ',' << to_string(c.method) << ',' << c.vl << ',' << c.jam_k << ',' << size_text(r.extents, dim)
     << ',' << c.steps << ',' << c.block << ',' << r.tile_height << ',' << c.threads << ',' << r.seconds << ','
     << r.layout_seconds << ',' << r.gflops << ',';
  if (r.max_rel_err) os << *r.max_rel_err;
  os << ',' << r.counters.vector_loads + r.counters.scalar_loads << ','
     << r.counters.vector_stores + r.counters.scalar_stores << ',' << r.counters.reorg_ops;
  return os.str();
}

void emit_csv(const std::vector<BenchResult>& results, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open CSV file '" + path + "' for writing");
  f << csv_header() << '\n';
  for (const auto& r : results) f << csv_row(r) << '\n';
  f.flush();
  if (!f) throw std::runtime_error("failed writing CSV file '" + path + "'");
}

std::string plan_report(const BenchConfig& cfg) {
  validate_config(cfg);
  std::ostringstream os;
  const ShufflePlan plan = build_transpose_plan(cfg.vl);
  os << "transpose plan, vl " << cfg.vl << '\n' << dump_plan(plan) << '\n';
  os << "stage-swapped order, vl " << cfg.vl << '\n' << dump_plan(build_stage_swapped_plan(cfg.vl)) << '\n';
  const StencilSpec spec = make_stencil_spec(cfg.stencil);
  if (cfg.block > 0) {
    const TiledRunOptions opt = tiled_options(cfg);
    os << "tile schedule for " << spec.name << '\n' << dump_schedule(schedule_for(cfg, spec, extents_for(cfg, spec)), &opt);
  } else {
    os << "tile schedule for " << spec.name << ": untiled, one full sweep per "
       << (cfg.jam_k == 2 ? "two steps" : "step") << '\n';
  }
  return os.str();
}

int bench_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const std::optional<BenchConfig> cfg = parse_cli(argc, argv, out);
    if (!cfg) return 0;
    if (cfg->command == Command::plan) {
      out << plan_report(*cfg);
      return 0;
    }
    const bool check = cfg->command == Command::verify;
    const BenchResult r = run_benchmark(*cfg, check);
    if (!cfg->csv.empty()) emit_csv({r}, cfg->csv);
    if (check) {
      const double tol = tolerance_for(*cfg);
      const bool ok = *r.max_rel_err <= tol;
      out << std::setprecision(17) << "max relative error " << *r.max_rel_err << " (tolerance " << tol << "): "
          << (ok ? "PASS" : "FAIL") << '\n';
      return ok ? 0 : 1;
    }
    if (cfg->csv.empty()) out << csv_header() << '\n' << csv_row(r) << '\n';
    else out << std::setprecision(6) << r.gflops << " GFlop/s in " << r.seconds << " s\n";
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tstencil
