// Command-line front end: plan a single query, run the benchmark
// protocol, dump the builtin maps, or validate a saved trace.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtrrt/bench.hpp"
#include "mtrrt/heuristics.hpp"
#include "mtrrt/planners.hpp"
#include "mtrrt/workspace.hpp"

namespace {

using namespace mtrrt;

constexpr int kExitPlanningFailure = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct PlanOptions {
  std::string builtin;
  std::string map_path;
  std::string planner = "mtrrt";
  std::uint64_t seed = 1;
  std::string render_path;
  std::string trace_path;
  std::vector<double> start_flag;
  std::vector<double> goal_flag;
  double start_theta = 0.0;
  Query query;
};

int run_plan(const PlanOptions& opt) {
  bench::BenchmarkConfig env_cfg;
  if (opt.start_flag.size() == 2) {
    env_cfg.start_override = Point{opt.start_flag[0], opt.start_flag[1]};
  }
  if (opt.goal_flag.size() == 2) {
    env_cfg.goal_override = Point{opt.goal_flag[0], opt.goal_flag[1]};
  }
  const std::string env_name = opt.builtin.empty() ? opt.map_path : opt.builtin;
  const bench::Environment env = bench::load_environment(env_name, env_cfg);

  Query query = opt.query;
  query.start.pos = env.start;
  query.start.theta = opt.start_theta;
  query.goal = env.goal;
  query.record_trace = !opt.trace_path.empty();

  SeededRng rng(opt.seed);
  const PlanResult result =
      planner_by_name(opt.planner)(query, env.grid, rng);
  std::cout << bench::plan_result_to_json(result, opt.planner, env_name,
                                          opt.seed);
  if (!opt.render_path.empty()) {
    write_file(opt.render_path,
               bench::render_svg_string(env.grid, &result.forest,
                                        &result.trajectory, &env.start,
                                        &env.goal));
  }
  if (!opt.trace_path.empty()) {
    std::string trace = result.forest.serialize();
    for (const State& s : result.trajectory) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "traj %.17g %.17g %.17g %.17g %.17g\n",
                    s.pos.h, s.pos.v, s.theta, s.v, s.omega);
      trace += buf;
    }
    for (const TraceEvent& ev : result.trace) {
      trace += "# " + ev.to_line() + "\n";
    }
    write_file(opt.trace_path, trace);
  }
  return result.success ? 0 : kExitPlanningFailure;
}

void add_query_flags(CLI::App* cmd, Query& q) {
  cmd->add_option("--goal-radius", q.goal_radius);
  cmd->add_option("--max-iterations", q.max_iterations);
  cmd->add_option("--lambda", q.lambda);
  cmd->add_option("--lambda-connect", q.lambda_connect);
  cmd->add_option("--sigma", q.sigma);
  cmd->add_option("--kappa-max", q.kappa_max);
  cmd->add_option("--guidance-budget", q.guidance_budget);
  cmd->add_option("--n-init", q.n_init);
  cmd->add_option("--goal-bias", q.goal_bias);
  cmd->add_option("--b2u-step", q.b2u_step);
  cmd->add_option("--w1", q.params.w1);
  cmd->add_option("--w2", q.params.w2);
  cmd->add_option("--dt", q.params.dt);
  cmd->add_option("--alpha-v", q.params.alpha_v);
  cmd->add_option("--alpha-omega", q.params.alpha_omega);
  cmd->add_option("--n-v", q.params.n_v);
  cmd->add_option("--n-omega", q.params.n_omega);
  cmd->add_option("--v-max", q.params.v_max_global);
  cmd->add_option("--v-min", q.params.v_min_global);
  cmd->add_option("--omega-max", q.params.omega_max_global);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinodynamic multi-tree motion planning benchmark"};
  app.require_subcommand(1);

  PlanOptions plan_opt;
  CLI::App* plan = app.add_subcommand("plan", "Plan a single query");
  auto* builtin_opt = plan->add_option("--builtin", plan_opt.builtin,
                                       "Builtin map: room, clutter, maze");
  plan->add_option("--map", plan_opt.map_path, "Map file (text grid or PGM)")
      ->excludes(builtin_opt);
  plan->add_option("--planner", plan_opt.planner, "rrt, b2u, or mtrrt");
  plan->add_option("--seed", plan_opt.seed);
  plan->add_option("--render", plan_opt.render_path, "Write an SVG here");
  plan->add_option("--trace", plan_opt.trace_path, "Write a forest trace");
  plan->add_option("--start", plan_opt.start_flag, "Start h v")->expected(2);
  plan->add_option("--goal", plan_opt.goal_flag, "Goal h v")->expected(2);
  plan->add_option("--start-theta", plan_opt.start_theta);
  add_query_flags(plan, plan_opt.query);

  bench::BenchmarkConfig bench_cfg;
  std::string bench_config_path;
  std::string bench_planners_flag;
  std::string bench_envs_flag;
  CLI::App* benchcmd =
      app.add_subcommand("bench", "Run the 50-trial benchmark protocol");
  benchcmd->add_option("--config", bench_config_path, "JSON config file");
  benchcmd->add_option("--trials", bench_cfg.trials);
  benchcmd->add_option("--base-seed", bench_cfg.base_seed);
  benchcmd->add_option("--planners", bench_planners_flag,
                       "Comma-separated planner ids");
  benchcmd->add_option("--envs", bench_envs_flag,
                       "Comma-separated builtin names or map paths");
  benchcmd->add_option("--jobs", bench_cfg.jobs);
  benchcmd->add_option("--out", bench_cfg.output_dir, "Output directory");
  add_query_flags(benchcmd, bench_cfg.query);

  std::string maps_out = ".";
  CLI::App* maps =
      app.add_subcommand("maps", "Write the builtin maps to files");
  maps->add_option("--out", maps_out, "Output directory");

  std::string validate_map_builtin;
  std::string validate_map_path;
  std::string validate_trace_path;
  CLI::App* validate =
      app.add_subcommand("validate", "Audit a saved forest/trajectory trace");
  auto* vb = validate->add_option("--builtin", validate_map_builtin);
  validate->add_option("--map", validate_map_path)->excludes(vb);
  validate->add_option("trace", validate_trace_path, "Trace file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  try {
    if (plan->parsed()) {
      if (plan_opt.builtin.empty() && plan_opt.map_path.empty()) {
        std::cerr << "plan: need --builtin or --map\n";
        return kExitUsage;
      }
      return run_plan(plan_opt);
    }
    if (benchcmd->parsed()) {
      if (!bench_config_path.empty()) {
        bench_cfg = bench::BenchmarkConfig::from_json(
            read_file(bench_config_path));
      }
      if (!bench_planners_flag.empty()) {
        bench_cfg.planners = split_csv(bench_planners_flag);
      }
      if (!bench_envs_flag.empty()) {
        bench_cfg.environments = split_csv(bench_envs_flag);
      }
      if (bench_cfg.output_dir.empty()) bench_cfg.output_dir = "bench_out";
      const bench::BenchmarkRun run = bench::run_benchmark(bench_cfg);
      bench::export_records(run, bench_cfg, bench_cfg.output_dir);
      std::cout << bench::stats_to_json(run.stats);
      return 0;
    }
    if (maps->parsed()) {
      std::filesystem::create_directories(maps_out);
      for (const std::string& name : builtin_map_names()) {
        const BuiltinWorld world = builtin_map(name);
        write_file(maps_out + "/" + name + ".map", format_map(world.grid));
        write_file(maps_out + "/" + name + ".svg",
                   bench::render_svg_string(world.grid, nullptr, nullptr,
                                            &world.start, &world.goal));
      }
      return 0;
    }
    if (validate->parsed()) {
      if (validate_map_builtin.empty() && validate_map_path.empty()) {
        std::cerr << "validate: need --builtin or --map\n";
        return kExitUsage;
      }
      const OccupancyGrid grid =
          validate_map_builtin.empty()
              ? load_map(validate_map_path)
              : builtin_map(validate_map_builtin).grid;
      std::string text = read_file(validate_trace_path);
      // comment lines carry the event log; the auditor ignores them
      std::string filtered;
      std::istringstream in(text);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') filtered += line + "\n";
      }
      const auto problems = bench::validate_trace(filtered, grid);
      for (const std::string& p : problems) std::cerr << p << "\n";
      std::cout << (problems.empty() ? "ok" : "invalid") << "\n";
      return problems.empty() ? 0 : kExitPlanningFailure;
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
