#include "mtrrt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mtrrt/heuristics.hpp"

namespace mtrrt::bench {

using nlohmann::json;

namespace {

std::string fmt(double x, const char* spec = "%.17g") {
  char buf[40];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

json query_to_json(const Query& q) {
  const KinodynamicParams& p = q.params;
  return json{
      {"goal_radius", q.goal_radius},
      {"max_iterations", q.max_iterations},
      {"lambda", q.lambda},
      {"lambda_connect", q.lambda_connect},
      {"sigma", q.sigma},
      {"kappa_max", q.kappa_max},
      {"guidance_budget", q.guidance_budget},
      {"n_init", q.n_init},
      {"goal_bias", q.goal_bias},
      {"b2u_step", q.b2u_step},
      {"params",
       {{"alpha_v", p.alpha_v},
        {"alpha_omega", p.alpha_omega},
        {"dt", p.dt},
        {"n_v", p.n_v},
        {"n_omega", p.n_omega},
        {"v_min_global", p.v_min_global},
        {"v_max_global", p.v_max_global},
        {"omega_max_global", p.omega_max_global},
        {"w1", p.w1},
        {"w2", p.w2}}}};
}

void query_from_json(const json& j, Query& q) {
  q.goal_radius = j.value("goal_radius", q.goal_radius);
  q.max_iterations = j.value("max_iterations", q.max_iterations);
  q.lambda = j.value("lambda", q.lambda);
  q.lambda_connect = j.value("lambda_connect", q.lambda_connect);
  q.sigma = j.value("sigma", q.sigma);
  q.kappa_max = j.value("kappa_max", q.kappa_max);
  q.guidance_budget = j.value("guidance_budget", q.guidance_budget);
  q.n_init = j.value("n_init", q.n_init);
  q.goal_bias = j.value("goal_bias", q.goal_bias);
  q.b2u_step = j.value("b2u_step", q.b2u_step);
  if (j.contains("params")) {
    const json& p = j.at("params");
    KinodynamicParams& k = q.params;
    k.alpha_v = p.value("alpha_v", k.alpha_v);
    k.alpha_omega = p.value("alpha_omega", k.alpha_omega);
    k.dt = p.value("dt", k.dt);
    k.n_v = p.value("n_v", k.n_v);
    k.n_omega = p.value("n_omega", k.n_omega);
    k.v_min_global = p.value("v_min_global", k.v_min_global);
    k.v_max_global = p.value("v_max_global", k.v_max_global);
    k.omega_max_global = p.value("omega_max_global", k.omega_max_global);
    k.w1 = p.value("w1", k.w1);
    k.w2 = p.value("w2", k.w2);
  }
}

}  // namespace

std::string BenchmarkConfig::to_json() const {
  json j{{"schema_version", kSchemaVersion},
         {"environments", environments},
         {"planners", planners},
         {"trials", trials},
         {"base_seed", base_seed},
         {"inflation_radius", inflation_radius},
         {"jobs", jobs},
         {"output_dir", output_dir},
         {"query", query_to_json(query)}};
  if (start_override) {
    j["start"] = {start_override->h, start_override->v};
  }
  if (goal_override) {
    j["goal"] = {goal_override->h, goal_override->v};
  }
  return j.dump(2) + "\n";
}

BenchmarkConfig BenchmarkConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.value("schema_version", kSchemaVersion) != kSchemaVersion) {
    throw std::runtime_error("config: unsupported schema_version");
  }
  BenchmarkConfig c;
  c.environments = j.value("environments", c.environments);
  c.planners = j.value("planners", c.planners);
  c.trials = j.value("trials", c.trials);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.inflation_radius = j.value("inflation_radius", c.inflation_radius);
  c.jobs = j.value("jobs", c.jobs);
  c.output_dir = j.value("output_dir", c.output_dir);
  if (j.contains("query")) query_from_json(j.at("query"), c.query);
  if (j.contains("start")) {
    c.start_override = Point{j["start"][0], j["start"][1]};
  }
  if (j.contains("goal")) {
    c.goal_override = Point{j["goal"][0], j["goal"][1]};
  }
  if (c.trials < 1) throw std::runtime_error("config: trials must be >= 1");
  return c;
}

Environment load_environment(const std::string& name_or_path,
                             const BenchmarkConfig& config) {
  Environment env{name_or_path, OccupancyGrid::empty(1, 1), {}, {}};
  const auto& names = builtin_map_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    BuiltinWorld world = builtin_map(name_or_path);
    env.grid = std::move(world.grid);
    env.start = world.start;
    env.goal = world.goal;
  } else {
    env.grid = load_map(name_or_path);
    if (!config.start_override || !config.goal_override) {
      throw std::runtime_error("environment " + name_or_path +
                               ": map files need explicit start and goal");
    }
  }
  if (config.start_override) env.start = *config.start_override;
  if (config.goal_override) env.goal = *config.goal_override;
  if (config.inflation_radius > 0.0) {
    env.grid = env.grid.inflated(config.inflation_radius);
  }
  return env;
}

BenchmarkStats compute_stats(const std::vector<MetricRecord>& records) {
  struct Cell {
    std::vector<std::array<double, 3>> values;  // successes only
    std::size_t excluded = 0;
  };
  std::map<std::string, std::map<std::string, Cell>> cells;
  for (const MetricRecord& r : records) {
    Cell& cell = cells[r.planner][r.env];
    if (!r.success) {
      ++cell.excluded;
      continue;
    }
    cell.values.push_back({r.time_s, r.traj_len_px,
                           static_cast<double>(r.invalid_connections)});
  }

  BenchmarkStats stats;
  for (const auto& [planner, envs] : cells) {
    for (const auto& [env, cell] : envs) {
      for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
        MetricAggregate agg;
        agg.samples = cell.values.size();
        agg.excluded = cell.excluded;
        if (!cell.values.empty()) {
          double sum = 0.0;
          for (const auto& v : cell.values) sum += v[m];
          agg.mean = sum / cell.values.size();
          double ss = 0.0;
          for (const auto& v : cell.values) {
            const double d = v[m] - agg.mean;
            ss += d * d;
          }
          agg.variance = ss / cell.values.size();  // population
        }
        stats[planner][env][kMetricNames[m]] = agg;
      }
    }
  }

  // Normalize against the RRT cell for the same environment and metric.
  const auto rrt_it = stats.find("rrt");
  for (auto& [planner, envs] : stats) {
    for (auto& [env, metrics] : envs) {
      for (auto& [metric, agg] : metrics) {
        if (rrt_it == stats.end()) continue;
        const auto env_it = rrt_it->second.find(env);
        if (env_it == rrt_it->second.end()) continue;
        const MetricAggregate& anchor = env_it->second.at(metric);
        if (anchor.samples == 0) continue;
        if (anchor.mean != 0.0) {
          agg.normalized_mean = agg.mean / anchor.mean;
          agg.normalized_valid = true;
        }
        if (anchor.variance != 0.0) {
          agg.normalized_variance = agg.variance / anchor.variance;
        }
      }
    }
  }
  return stats;
}

BenchmarkRun run_benchmark(const BenchmarkConfig& config) {
  std::vector<Environment> envs;
  envs.reserve(config.environments.size());
  for (const std::string& name : config.environments) {
    envs.push_back(load_environment(name, config));
  }
  for (const std::string& planner : config.planners) {
    planner_by_name(planner);  // fail fast on unknown ids
  }

  struct Task {
    std::size_t env_idx;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < envs.size(); ++e) {
    for (int t = 0; t < config.trials; ++t) tasks.push_back({e, t});
  }

  std::vector<MetricRecord> records(tasks.size() * config.planners.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) break;
      const Task& task = tasks[k];
      const Environment& env = envs[task.env_idx];
      const std::uint64_t seed = config.base_seed + task.trial;
      // Planner round-robin within the trial keeps time comparisons on
      // the same machine state.
      for (std::size_t p = 0; p < config.planners.size(); ++p) {
        Query query = config.query;
        query.start.pos = env.start;
        query.goal = env.goal;
        SeededRng rng(seed);
        const PlanResult result =
            planner_by_name(config.planners[p])(query, env.grid, rng);
        MetricRecord rec;
        rec.planner = config.planners[p];
        rec.env = env.name;
        rec.seed = seed;
        rec.success = result.success;
        rec.time_s = result.counters.wall_time;
        rec.traj_len_px =
            result.success ? trajectory_length(result.trajectory) : 0.0;
        rec.invalid_connections = result.counters.invalid_connections;
        records[k * config.planners.size() + p] = std::move(rec);
      }
    }
  };
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Canonical export order, independent of scheduling.
  std::sort(records.begin(), records.end(),
            [](const MetricRecord& a, const MetricRecord& b) {
              return std::tie(a.planner, a.env, a.seed) <
                     std::tie(b.planner, b.env, b.seed);
            });
  BenchmarkStats stats = compute_stats(records);
  return BenchmarkRun{std::move(records), std::move(stats)};
}

std::string records_to_csv(const std::vector<MetricRecord>& records) {
  std::string out =
      "planner,env,seed,success,time_s,traj_len_px,invalid_connections\n";
  for (const MetricRecord& r : records) {
    out += r.planner + "," + r.env + "," + std::to_string(r.seed) + "," +
           (r.success ? "true" : "false") + "," + fmt(r.time_s, "%.6f") + "," +
           fmt(r.traj_len_px) + "," + std::to_string(r.invalid_connections) +
           "\n";
  }
  return out;
}

std::string stats_to_json(const BenchmarkStats& stats) {
  json j{{"schema_version", kSchemaVersion}};
  json& planners = j["planners"];
  for (const auto& [planner, envs] : stats) {
    for (const auto& [env, metrics] : envs) {
      for (const auto& [metric, agg] : metrics) {
        json entry{{"mean", agg.mean},
                   {"variance", agg.variance},
                   {"samples", agg.samples},
                   {"excluded", agg.excluded}};
        if (agg.normalized_valid) {
          entry["normalized_mean"] = agg.normalized_mean;
          entry["normalized_variance"] = agg.normalized_variance;
        } else {
          entry["normalized_mean"] = nullptr;
          entry["normalized_variance"] = nullptr;
        }
        planners[planner][env][metric] = std::move(entry);
      }
    }
  }
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void export_records(const BenchmarkRun& run, const BenchmarkConfig& config,
                    const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/records.csv", records_to_csv(run.records));
  write_file(dir + "/stats.json", stats_to_json(run.stats));
  write_file(dir + "/config.json", config.to_json());
}

namespace {

std::string svg_num(double x) { return fmt(x, "%.3f"); }

void svg_line(std::ostream& out, const Point& a, const Point& b,
              const char* color, double width) {
  out << "<line x1=\"" << svg_num(a.h) << "\" y1=\"" << svg_num(a.v)
      << "\" x2=\"" << svg_num(b.h) << "\" y2=\"" << svg_num(b.v)
      << "\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"/>\n";
}

}  // namespace

void render_svg(const OccupancyGrid& grid, const Forest* forest,
                const std::vector<State>* trajectory, std::ostream& out,
                const Point* start, const Point* goal) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << grid.width()
      << "\" height=\"" << grid.height() << "\" viewBox=\"0 0 "
      << grid.width() << " " << grid.height() << "\">\n";
  out << "<rect width=\"" << grid.width() << "\" height=\"" << grid.height()
      << "\" fill=\"white\"/>\n";
  // Obstacles as per-row horizontal runs.
  for (int y = 0; y < grid.height(); ++y) {
    int x = 0;
    while (x < grid.width()) {
      if (!grid.occupied(x, y)) {
        ++x;
        continue;
      }
      int x1 = x;
      while (x1 < grid.width() && grid.occupied(x1, y)) ++x1;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << (x1 - x)
          << "\" height=\"1\" fill=\"black\"/>\n";
      x = x1;
    }
  }
  if (forest) {
    auto draw_tree = [&](const Tree& t) {
      const char* color =
          t.kind() == TreeKind::rooted ? "orange" : "blue";
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (auto p = t.parent(i)) {
          svg_line(out, t.state(*p).pos, t.state(i).pos, color, 1.0);
        }
      }
    };
    for (std::size_t id : forest->heuristic_ids()) draw_tree(forest->tree(id));
    draw_tree(forest->rooted());
  }
  if (trajectory && trajectory->size() >= 2) {
    out << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"2\" "
           "points=\"";
    for (std::size_t i = 0; i < trajectory->size(); ++i) {
      if (i) out << " ";
      out << svg_num((*trajectory)[i].pos.h) << ","
          << svg_num((*trajectory)[i].pos.v);
    }
    out << "\"/>\n";
  }
  if (start) {
    out << "<circle cx=\"" << svg_num(start->h) << "\" cy=\""
        << svg_num(start->v) << "\" r=\"4\" fill=\"red\"/>\n";
  }
  if (goal) {
    out << "<circle cx=\"" << svg_num(goal->h) << "\" cy=\""
        << svg_num(goal->v) << "\" r=\"4\" fill=\"green\"/>\n";
  }
  out << "</svg>\n";
}

std::string render_svg_string(const OccupancyGrid& grid, const Forest* forest,
                              const std::vector<State>* trajectory,
                              const Point* start, const Point* goal) {
  std::ostringstream out;
  render_svg(grid, forest, trajectory, out, start, goal);
  return out.str();
}

std::string plan_result_to_json(const PlanResult& result,
                                const std::string& planner,
                                const std::string& env, std::uint64_t seed) {
  json j{{"planner", planner},
         {"env", env},
         {"seed", seed},
         {"success", result.success},
         {"iterations", result.counters.iterations},
         {"invalid_connections", result.counters.invalid_connections},
         {"time_s", result.counters.wall_time}};
  j["trajectory_length"] =
      result.success ? trajectory_length(result.trajectory) : 0.0;
  json traj = json::array();
  for (const State& s : result.trajectory) {
    traj.push_back({s.pos.h, s.pos.v, s.theta, s.v, s.omega});
  }
  j["trajectory"] = std::move(traj);
  return j.dump(2) + "\n";
}

std::vector<std::string> validate_trace(const std::string& text,
                                        const OccupancyGrid& grid) {
  std::vector<std::string> problems;
  struct ParsedTree {
    std::size_t id;
    bool rooted;
    std::vector<TreeNode> nodes;
  };
  std::vector<ParsedTree> trees;
  std::vector<State> traj;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (tok == "tree") {
      std::size_t id;
      std::string kind;
      if (!(ls >> id >> kind) || (kind != "rooted" && kind != "heuristic")) {
        problems.push_back(where + "malformed tree header");
        continue;
      }
      trees.push_back(ParsedTree{id, kind == "rooted", {}});
    } else if (tok == "node") {
      if (trees.empty()) {
        problems.push_back(where + "node before any tree header");
        continue;
      }
      std::size_t idx;
      TreeNode node;
      std::string parent_tok;
      if (!(ls >> idx >> node.state.pos.h >> node.state.pos.v >>
            node.state.theta >> node.state.v >> node.state.omega >>
            parent_tok) ||
          parent_tok.rfind("parent=", 0) != 0) {
        problems.push_back(where + "malformed node line");
        continue;
      }
      const std::string pval = parent_tok.substr(7);
      if (pval != "none") node.parent = std::stoul(pval);
      if (idx != trees.back().nodes.size()) {
        problems.push_back(where + "node index out of sequence");
        continue;
      }
      trees.back().nodes.push_back(node);
    } else if (tok == "traj") {
      State s;
      if (!(ls >> s.pos.h >> s.pos.v >> s.theta >> s.v >> s.omega)) {
        problems.push_back(where + "malformed traj line");
        continue;
      }
      traj.push_back(s);
    } else {
      problems.push_back(where + "unknown record \"" + tok + "\"");
    }
  }

  for (const ParsedTree& t : trees) {
    const std::string tag = "tree " + std::to_string(t.id) + ": ";
    if (t.nodes.empty()) {
      problems.push_back(tag + "empty");
      continue;
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& p = t.nodes[i].parent;
      if (i == 0) {
        if (p) problems.push_back(tag + "node 0 has a parent");
        continue;
      }
      if (!p) {
        problems.push_back(tag + "extra root at node " + std::to_string(i));
      } else if (*p >= i) {
        problems.push_back(tag + "node " + std::to_string(i) +
                           " parent not earlier");
      } else if (!segment_collision_free(grid, t.nodes[*p].state.pos,
                                         t.nodes[i].state.pos)) {
        problems.push_back(tag + "edge " + std::to_string(*p) + "->" +
                           std::to_string(i) + " collides");
      }
    }
  }

  // Node-disjointness across trees.
  std::vector<std::tuple<double, double, double, double, double>> all;
  for (const ParsedTree& t : trees) {
    for (const TreeNode& n : t.nodes) {
      all.emplace_back(n.state.pos.h, n.state.pos.v, n.state.theta, n.state.v,
                       n.state.omega);
    }
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    problems.push_back("duplicate state across trees");
  }

  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (!grid.is_free(traj[i].pos)) {
      problems.push_back("traj state " + std::to_string(i) +
                         " not in free space");
    }
    if (i > 0 && !segment_collision_free(grid, traj[i - 1].pos, traj[i].pos)) {
      problems.push_back("traj segment " + std::to_string(i - 1) + "->" +
                         std::to_string(i) + " collides");
    }
  }
  return problems;
}

}  // namespace mtrrt::bench
