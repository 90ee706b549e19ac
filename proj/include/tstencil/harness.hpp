#pragma once

// Benchmark driver behind the stencil_bench tool: configuration, timed
// runs, oracle verification and CSV output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tstencil/core.hpp"
#include "tstencil/kernels.hpp"

namespace tstencil {

/// Bad flag or flag combination.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Command { run, verify, plan };

struct BenchConfig {
  Command command = Command::run;
  std::string stencil = "1d3p";
  /// One entry per dimension; a single entry is used for every dimension.
  /// Empty: 16384, 256x256 or 64x64x64.
  std::vector<std::size_t> size;
  int steps = 16;
  Method method = Method::transpose;
  int vl = 4;
  int jam_k = 1;
  std::ptrdiff_t block = 0;  // 0: untiled sweeps
  int tile_height = 0;       // T_b; 3D presets always run with 1
  int threads = 1;
  std::uint64_t seed = 1;
  std::string csv;
  /// Largest acceptable max relative error; negative means 1e-13 * steps.
  double tolerance = -1.0;
};

/// Throws UsageError naming the first conflict found.
void validate_config(const BenchConfig& cfg);

/// Parses `run|verify|plan` and its flags. Returns nullopt after printing
/// help to `out`. Throws UsageError on unknown flags or bad combinations.
std::optional<BenchConfig> parse_cli(int argc, const char* const* argv, std::ostream& out);

struct BenchResult {
  BenchConfig config;
  Extents extents{1, 1, 1};
  int tile_height = 0;  // as run
  double seconds = 0.0;          // stepping plus layout conversion
  double layout_seconds = 0.0;   // conversion into and out of the method's layout
  double gflops = 0.0;
  std::optional<double> max_rel_err;
  Counters counters;
  std::uint64_t flops = 0;  // point updates times flops per point
};

/// Seeds the grid, converts it to the method's layout, runs `steps` steps
/// (after an untimed one-step warm-up) and converts back. With
/// `with_oracle` the result is compared against scalar steps from the same
/// seed.
BenchResult run_benchmark(const BenchConfig& cfg, bool with_oracle = false);

/// Max relative error of the configured pipeline against the scalar
/// oracle. Refuses problems whose point-steps exceed the oracle's budget.
double verify(const BenchConfig& cfg);

double tolerance_for(const BenchConfig& cfg);

std::string csv_header();
std::string csv_row(const BenchResult& r);

/// Header plus one row per result. Throws std::runtime_error naming the
/// path when it cannot be written.
void emit_csv(const std::vector<BenchResult>& results, const std::string& path);

/// Shuffle plan, its schedule, and the tile schedule the config would run.
std::string plan_report(const BenchConfig& cfg);

/// Entry point of the command-line tool; returns the exit status.
int bench_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tstencil
