#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mtrrt/planners.hpp"
#include "mtrrt/workspace.hpp"

namespace mtrrt::bench {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string> kMetricNames = {
    "time_s", "traj_len_px", "invalid_connections"};

struct BenchmarkConfig {
  std::vector<std::string> environments{"room", "clutter", "maze"};
  std::vector<std::string> planners{"rrt", "b2u", "mtrrt"};
  int trials = 50;
  std::uint64_t base_seed = 1;
  Query query;  // start/goal come from the environment unless overridden
  std::optional<Point> start_override;
  std::optional<Point> goal_override;
  double inflation_radius = 0.0;
  int jobs = 1;
  std::string output_dir;

  std::string to_json() const;
  static BenchmarkConfig from_json(const std::string& text);
};

struct MetricRecord {
  std::string planner;
  std::string env;
  std::uint64_t seed = 0;
  bool success = false;
  double time_s = 0.0;
  double traj_len_px = 0.0;
  std::uint64_t invalid_connections = 0;
};

struct MetricAggregate {
  double mean = 0.0;
  double variance = 0.0;  // population
  double normalized_mean = 0.0;
  double normalized_variance = 0.0;
  bool normalized_valid = false;  // false when the RRT anchor is 0/absent
  std::size_t samples = 0;
  std::size_t excluded = 0;  // failed trials left out of the aggregates
};

/// stats[planner][env][metric]
using BenchmarkStats =
    std::map<std::string,
             std::map<std::string, std::map<std::string, MetricAggregate>>>;

struct BenchmarkRun {
  std::vector<MetricRecord> records;  // sorted by (planner, env, seed)
  BenchmarkStats stats;
};

/// Loads an environment: a builtin name or a map file path (an explicit
/// query is then required via the config overrides).
struct Environment {
  std::string name;
  OccupancyGrid grid;
  Point start;
  Point goal;
};
Environment load_environment(const std::string& name_or_path,
                             const BenchmarkConfig& config);

/// planners x environments x trials with paired seeds (base_seed + i for
/// trial i, identical across planners). Trials within a cell run
/// round-robin across planners so time comparisons share machine state.
BenchmarkRun run_benchmark(const BenchmarkConfig& config);

/// Aggregation alone, exposed for tests.
BenchmarkStats compute_stats(const std::vector<MetricRecord>& records);

/// Writes records.csv, stats.json, and config.json into dir.
void export_records(const BenchmarkRun& run, const BenchmarkConfig& config,
                    const std::string& dir);

std::string records_to_csv(const std::vector<MetricRecord>& records);
std::string stats_to_json(const BenchmarkStats& stats);

/// Map layer black-on-white, rooted edges orange, heuristic edges blue,
/// trajectory red, start red / goal green dots; one SVG unit per pixel.
void render_svg(const OccupancyGrid& grid, const Forest* forest,
                const std::vector<State>* trajectory, std::ostream& out,
                const Point* start = nullptr, const Point* goal = nullptr);

std::string render_svg_string(const OccupancyGrid& grid, const Forest* forest,
                              const std::vector<State>* trajectory,
                              const Point* start = nullptr,
                              const Point* goal = nullptr);

/// Deterministic JSON for a single plan (everything except time_s is a
/// pure function of query, map, and seed).
std::string plan_result_to_json(const PlanResult& result,
                                const std::string& planner,
                                const std::string& env, std::uint64_t seed);

/// Forest/trajectory trace audit for the `validate` CLI subcommand:
/// parses the line format emitted by Forest::serialize plus optional
/// "traj <h> <v> <theta> <v> <omega>" lines, then re-checks structure
/// and collision-freeness against the grid. Returns the problems found.
std::vector<std::string> validate_trace(const std::string& text,
                                        const OccupancyGrid& grid);

}  // namespace mtrrt::bench
