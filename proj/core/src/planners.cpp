#include "mtrrt/planners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <limits>

namespace mtrrt {

namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string TraceEvent::to_line() const {
  const std::string head = "iter=" + std::to_string(iteration) + " ";
  switch (kind) {
    case Kind::tree_spawned:
      return head + "tree_spawned id=" + std::to_string(a);
    case Kind::node_added:
      return head + "node_added tree=" + std::to_string(a) +
             " node=" + std::to_string(b);
    case Kind::connection:
      return head + "connection a=" + std::to_string(a) +
             " b=" + std::to_string(b) + " dist=" + fmt_double(value);
    case Kind::merge:
      return head + "merge dst=" + std::to_string(a) +
             " src=" + std::to_string(b);
    case Kind::merge_rejected:
      return head + "merge_rejected a=" + std::to_string(a) +
             " b=" + std::to_string(b);
    case Kind::connection_rejected:
      return head + "connection_rejected a=" + std::to_string(a) +
             " b=" + std::to_string(b);
    case Kind::guidance_start:
      return head + "guidance_start tree=" + std::to_string(a);
    case Kind::guidance_end:
      return head + "guidance_end tree=" + std::to_string(a);
    case Kind::tree_deleted:
      return head + "tree_deleted id=" + std::to_string(a);
    case Kind::goal_reached:
      return head + "goal_reached node=" + std::to_string(a);
  }
  return head + "unknown";
}

bool in_goal_region(const State& x, const Point& goal, double r) {
  return distance(x.pos, goal) <= r;
}

std::vector<State> extract_trajectory(const Tree& tree, std::size_t leaf) {
  if (leaf >= tree.size()) {
    throw std::out_of_range("extract_trajectory: leaf index out of range");
  }
  std::vector<State> traj;
  for (std::optional<std::size_t> cur = leaf; cur; cur = tree.parent(*cur)) {
    traj.push_back(tree.state(*cur));
  }
  std::reverse(traj.begin(), traj.end());
  return traj;
}

std::vector<ControlInput> extract_controls(const Tree& tree,
                                           std::size_t leaf) {
  if (leaf >= tree.size()) {
    throw std::out_of_range("extract_controls: leaf index out of range");
  }
  std::vector<ControlInput> controls;
  for (std::optional<std::size_t> cur = leaf; tree.parent(*cur);
       cur = tree.parent(*cur)) {
    controls.push_back(tree.control(*cur).value());
  }
  std::reverse(controls.begin(), controls.end());
  return controls;
}

double trajectory_length(const std::vector<State>& traj) {
  if (traj.empty()) {
    throw std::invalid_argument("trajectory_length: empty trajectory");
  }
  double len = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    len += distance(traj[i - 1].pos, traj[i].pos);
  }
  return len;
}

namespace {

// Shared per-trial machinery: timing, tracing, auditing, sampling.
struct Trial {
  const Query& query;
  const OccupancyGrid& grid;
  SeededRng& rng;
  PlanResult result;
  std::chrono::steady_clock::time_point t0;

  Trial(const Query& q, const OccupancyGrid& g, SeededRng& r)
      : query(q), grid(g), rng(r), result{.forest = Forest(q.start)} {
    t0 = std::chrono::steady_clock::now();
  }

  void trace(TraceEvent::Kind kind, std::size_t a, std::size_t b = 0,
             double value = 0.0) {
    if (!query.record_trace) return;
    result.trace.push_back(
        TraceEvent{kind, result.counters.iterations, a, b, value});
  }

  Point sample() {
    if (rng.uniform() < query.goal_bias) return query.goal;
    return random_state(grid, rng);
  }

  // Goal bias applies at the sampling layer regardless of the source
  // distribution, so guided draws keep the same 5% pull.
  Point sample_guided(const GmmModel& gmm) {
    if (rng.uniform() < query.goal_bias) return query.goal;
    return sample_heuristic_state(gmm, grid, rng);
  }

  void audit_step() {
    if (!query.audit_every_iteration) return;
    if (!result.forest.audit(&grid)) ++result.audit_violations;
  }

  // Extends the rooted tree and handles tracing, tracker bookkeeping,
  // and the goal test. Returns true when the goal region is reached.
  bool extend_rooted(const Point& x_rand, bool tracked,
                     std::optional<std::size_t> near_hint = std::nullopt) {
    auto idx = extend(result.forest.rooted(), x_rand, grid, query.start.pos,
                      query.goal, query.params, result.counters, near_hint);
    if (!idx) return false;
    if (tracked) result.forest.note_node_added(Forest::kRootedId, *idx);
    trace(TraceEvent::Kind::node_added, Forest::kRootedId, *idx);
    if (in_goal_region(result.forest.rooted().state(*idx), query.goal,
                       query.goal_radius)) {
      goal_node = *idx;
      trace(TraceEvent::Kind::goal_reached, *idx);
      return true;
    }
    return false;
  }

  PlanResult finish(bool success) {
    result.success = success;
    if (success) {
      if (goal_node == SIZE_MAX) {
        // start already inside the goal region
        result.trajectory = {query.start};
      } else {
        result.trajectory =
            extract_trajectory(result.forest.rooted(), goal_node);
        result.controls = extract_controls(result.forest.rooted(), goal_node);
      }
    }
    result.counters.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return std::move(result);
  }

  std::size_t goal_node = SIZE_MAX;
};

void validate_query(const Query& query, const OccupancyGrid& grid) {
  if (!grid.is_free(query.start.pos)) {
    throw std::invalid_argument("query: start is not in free space");
  }
  if (!grid.is_free(query.goal)) {
    throw std::invalid_argument("query: goal is not in free space");
  }
  if (query.goal_radius <= 0.0) {
    throw std::invalid_argument("query: goal_radius must be > 0");
  }
  if (query.max_iterations < 1) {
    throw std::invalid_argument("query: max_iterations must be >= 1");
  }
}

// A proximity event is only usable heuristic information when the two
// closest nodes actually see each other; a pair separated by a thin wall
// would steer the rooted tree into the obstacle.
bool connection_visible(const Forest& forest, const ConnectionEvent& ev,
                        const OccupancyGrid& grid) {
  return segment_collision_free(grid,
                                forest.tree(ev.tree_a).state(ev.node_a).pos,
                                forest.tree(ev.tree_b).state(ev.node_b).pos);
}

State geometric_state(const Point& from, const Point& to) {
  State s;
  s.pos = to;
  s.theta = wrap_angle(std::atan2(to.v - from.v, to.h - from.h));
  return s;
}

}  // namespace

PlanResult plan_rrt(const Query& query, const OccupancyGrid& grid,
                    SeededRng& rng) {
  validate_query(query, grid);
  Trial trial(query, grid, rng);
  if (in_goal_region(query.start, query.goal, query.goal_radius)) {
    return trial.finish(true);
  }
  while (trial.result.counters.iterations < query.max_iterations) {
    ++trial.result.counters.iterations;
    if (trial.extend_rooted(trial.sample(), /*tracked=*/false)) {
      return trial.finish(true);
    }
    trial.audit_step();
  }
  return trial.finish(false);
}

PlanResult plan_b2u(const Query& query, const OccupancyGrid& grid,
                    SeededRng& rng) {
  validate_query(query, grid);
  Trial trial(query, grid, rng);
  if (in_goal_region(query.start, query.goal, query.goal_radius)) {
    return trial.finish(true);
  }
  Forest& forest = trial.result.forest;
  const std::size_t goal_tree_id =
      forest.add_heuristic_tree(spawn_heuristic_tree(grid, rng, query.goal));
  trial.trace(TraceEvent::Kind::tree_spawned, goal_tree_id);

  bool heuristic_active = false;
  GmmModel gmm;
  std::uint64_t last_fit_iter = 0;
  static const std::uint64_t kRefitPeriod = [] {
    const char* s = std::getenv("MTRRT_B2U_REFIT");
    return s ? std::strtoull(s, nullptr, 10) : 2000ull;
  }();
  while (trial.result.counters.iterations < query.max_iterations) {
    const std::uint64_t iter = ++trial.result.counters.iterations;
    const bool rooted_turn = iter % 2 == 1;
    if (rooted_turn) {
      const Point x_rand =
          heuristic_active ? trial.sample_guided(gmm) : trial.sample();
      if (trial.extend_rooted(x_rand, /*tracked=*/true)) {
        return trial.finish(true);
      }
    } else {
      // Geometric goal-tree growth: fixed step toward a uniform sample.
      // The rooted tree plays the role of the goal for this tree, so half
      // the time the sample is swapped for the rooted node of the
      // currently closest tracked pair.
      Point x_rand;
      static const double kPull = [] {
        const char* s = std::getenv("MTRRT_B2U_PULL");
        return s ? std::atof(s) : 0.5;
      }();
      if (rng.uniform() < kPull) {
        const auto cp = forest.closest_pair(Forest::kRootedId, goal_tree_id);
        x_rand = cp ? forest.rooted().state(cp->first).pos : query.start.pos;
      } else {
        x_rand = random_state(grid, rng);
      }
      const Tree& goal_tree = forest.tree(goal_tree_id);
      const auto [d, near_idx] = dist_to_tree(goal_tree, x_rand);
      if (d > 0.0) {
        const Point from = goal_tree.state(near_idx).pos;
        const double step = std::min(query.b2u_step, d);
        const Point to{from.h + step * (x_rand.h - from.h) / d,
                       from.v + step * (x_rand.v - from.v) / d};
        if (segment_collision_free(grid, from, to)) {
          const std::size_t idx = forest.add_node(
              goal_tree_id, geometric_state(from, to), near_idx, std::nullopt,
              /*tracked=*/true);
          trial.trace(TraceEvent::Kind::node_added, goal_tree_id, idx);
        } else {
          ++trial.result.counters.invalid_connections;
        }
      }
    }
    // Blocking after every event means the tracker only re-fires on a
    // strictly closer approach, so the fit is refreshed exactly when the
    // trees make visible progress toward each other.
    if (auto ev = forest.poll_connection(query.lambda_connect)) {
      if (connection_visible(forest, *ev, grid)) {
        trial.trace(TraceEvent::Kind::connection, ev->tree_a, ev->tree_b,
                    ev->distance);
        gmm = fit_gmm(forest.tree(goal_tree_id), query.kappa_max,
                      query.sigma);
        heuristic_active = true;
        last_fit_iter = iter;
        trial.trace(TraceEvent::Kind::guidance_start, goal_tree_id);
      } else {
        ++trial.result.counters.invalid_connections;
        trial.trace(TraceEvent::Kind::connection_rejected, ev->tree_a,
                    ev->tree_b);
      }
      forest.block_pair(ev->tree_a, ev->tree_b);
    }
    // Fallback refresh: if the trees stop making visible progress the fit
    // can be aiming at an impassable gap, so periodically refit from the
    // goal tree, which keeps exploring and exposes alternative routes.
    if (heuristic_active && iter - last_fit_iter >= kRefitPeriod) {
      gmm = fit_gmm(forest.tree(goal_tree_id), query.kappa_max, query.sigma);
      last_fit_iter = iter;
    }
    trial.audit_step();
  }
  return trial.finish(false);
}

PlanResult plan_mtrrt(const Query& query, const OccupancyGrid& grid,
                      SeededRng& rng) {
  validate_query(query, grid);
  Trial trial(query, grid, rng);
  if (in_goal_region(query.start, query.goal, query.goal_radius)) {
    return trial.finish(true);
  }
  Forest& forest = trial.result.forest;
  for (std::size_t k = 0; k < query.n_init; ++k) {
    const std::size_t id =
        forest.add_heuristic_tree(spawn_heuristic_tree(grid, rng));
    trial.trace(TraceEvent::Kind::tree_spawned, id);
  }

  while (trial.result.counters.iterations < query.max_iterations) {
    ++trial.result.counters.iterations;
    const auto ev = forest.poll_connection(query.lambda_connect);
    if (!ev) {
      // Connect-Nodes stage: route the sample to whichever tree it is
      // close to, or seed a new tree there.
      const Point x_rand = trial.sample();
      // The proximity test and the extension share one nearest-node
      // search; a node with no controls left cannot anchor either.
      std::optional<std::size_t> root_near;
      const Tree& rooted = forest.rooted();
      if (rooted.exhausted_count() < rooted.size()) {
        const std::size_t i = rooted.nearest_extendable(x_rand);
        if (distance(rooted.state(i).pos, x_rand) < query.lambda) {
          root_near = i;
        }
      }
      if (root_near) {
        if (trial.extend_rooted(x_rand, /*tracked=*/true, root_near)) {
          return trial.finish(true);
        }
      } else {
        double d_best = std::numeric_limits<double>::infinity();
        std::size_t best_id = 0;
        std::size_t best_idx = 0;
        for (std::size_t hid : forest.heuristic_ids()) {
          const Tree& ht = forest.tree(hid);
          // Only trees that could beat both the running best and the
          // attach radius are worth a real query.
          if (ht.bbox_lower_bound(x_rand) >= std::min(d_best, query.lambda)) {
            continue;
          }
          const auto [d, idx] = dist_to_tree(ht, x_rand);
          if (d < d_best) {
            d_best = d;
            best_id = hid;
            best_idx = idx;
          }
        }
        bool attached = false;
        if (d_best < query.lambda) {
          const Point from = forest.tree(best_id).state(best_idx).pos;
          if (segment_collision_free(grid, from, x_rand)) {
            const std::size_t idx = forest.add_node(
                best_id, geometric_state(from, x_rand), best_idx);
            trial.trace(TraceEvent::Kind::node_added, best_id, idx);
            attached = true;
          } else {
            ++trial.result.counters.invalid_connections;
          }
        }
        if (!attached) {
          const std::size_t id = forest.add_heuristic_tree(
              spawn_heuristic_tree(grid, rng, x_rand));
          trial.trace(TraceEvent::Kind::tree_spawned, id);
        }
      }
    } else if (ev->tree_a == Forest::kRootedId ||
               ev->tree_b == Forest::kRootedId) {
      // Connect-Trees stage, rooted branch: the partner donates a GMM
      // bias for a bounded number of draws, then it is deleted.
      const std::size_t partner =
          ev->tree_a == Forest::kRootedId ? ev->tree_b : ev->tree_a;
      if (!connection_visible(forest, *ev, grid)) {
        ++trial.result.counters.invalid_connections;
        forest.block_pair(ev->tree_a, ev->tree_b);
        trial.trace(TraceEvent::Kind::connection_rejected, ev->tree_a,
                    ev->tree_b);
        trial.audit_step();
        continue;
      }
      trial.trace(TraceEvent::Kind::connection, ev->tree_a, ev->tree_b,
                  ev->distance);
      trial.trace(TraceEvent::Kind::guidance_start, partner);
      const GmmModel gmm =
          fit_gmm(forest.tree(partner), query.kappa_max, query.sigma);
      bool reached = false;
      for (std::size_t k = 0; k < query.guidance_budget; ++k) {
        if (k > 0) {
          if (trial.result.counters.iterations >= query.max_iterations) break;
          ++trial.result.counters.iterations;
        }
        const Point x_rand = trial.sample_guided(gmm);
        if (trial.extend_rooted(x_rand, /*tracked=*/true)) {
          reached = true;
          break;
        }
      }
      trial.trace(TraceEvent::Kind::guidance_end, partner);
      forest.remove_tree(partner);
      trial.trace(TraceEvent::Kind::tree_deleted, partner);
      if (reached) return trial.finish(true);
    } else {
      // Connect-Trees stage, heuristic branch: bridge and merge.
      trial.trace(TraceEvent::Kind::connection, ev->tree_a, ev->tree_b,
                  ev->distance);
      if (merge_trees(forest, *ev, grid)) {
        trial.trace(TraceEvent::Kind::merge, ev->tree_a, ev->tree_b);
        trial.trace(TraceEvent::Kind::tree_deleted, ev->tree_b);
      } else {
        // Pseudocode would transfer the nodes regardless; an uncheckable
        // bridge would break connectivity, so the pair is suppressed
        // until a strictly closer node pair shows up.
        ++trial.result.counters.invalid_connections;
        forest.block_pair(ev->tree_a, ev->tree_b);
        trial.trace(TraceEvent::Kind::merge_rejected, ev->tree_a, ev->tree_b);
      }
    }
    trial.audit_step();
  }
  return trial.finish(false);
}

PlannerFn planner_by_name(const std::string& name) {
  if (name == "rrt") return plan_rrt;
  if (name == "b2u") return plan_b2u;
  if (name == "mtrrt") return plan_mtrrt;
  throw std::invalid_argument("unknown planner: " + name);
}

const std::vector<std::string>& planner_names() {
  static const std::vector<std::string> names{"rrt", "b2u", "mtrrt"};
  return names;
}

}  // namespace mtrrt
