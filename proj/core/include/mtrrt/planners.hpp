#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtrrt/forest.hpp"
#include "mtrrt/heuristics.hpp"
#include "mtrrt/kinodynamics.hpp"
#include "mtrrt/workspace.hpp"

namespace mtrrt {

struct Query {
  State start;
  Point goal;
  double goal_radius = 15.0;
  std::uint64_t max_iterations = 20000;
  KinodynamicParams params;

  double lambda = 25.0;          // node attachment radius (MT-RRT stage A)
  double lambda_connect = 15.0;  // tree proximity threshold
  double sigma = 12.0;           // GMM component std deviation
  std::size_t kappa_max = 32;
  std::size_t guidance_budget = 64;  // heuristic draws per guiding tree
  std::size_t n_init = 4;           // initial heuristic trees (MT-RRT)
  double goal_bias = 0.05;          // 0 disables (strict-paper mode)
  double b2u_step = 15.0;           // goal-tree geometric step (B2U)

  bool record_trace = false;
  bool audit_every_iteration = false;
};

struct TraceEvent {
  enum class Kind {
    tree_spawned,
    node_added,
    connection,
    merge,
    merge_rejected,
    connection_rejected,
    guidance_start,
    guidance_end,
    tree_deleted,
    goal_reached,
  };
  Kind kind;
  std::uint64_t iteration = 0;
  std::size_t a = 0;  // tree id (or node id for goal_reached)
  std::size_t b = 0;  // second tree id / node id, kind-dependent
  double value = 0.0;  // distance or coordinate payload

  std::string to_line() const;
};

struct PlanResult {
  bool success = false;
  std::vector<State> trajectory;        // root-first; empty on failure
  std::vector<ControlInput> controls;   // one per transition
  PlanCounters counters;
  Forest forest;                        // final snapshot, for rendering
  std::vector<TraceEvent> trace;        // when query.record_trace
  std::uint64_t audit_violations = 0;   // when query.audit_every_iteration
};

/// Closed-ball goal test.
bool in_goal_region(const State& x, const Point& goal, double r);

/// Root-first state sequence from the root down to `leaf`.
std::vector<State> extract_trajectory(const Tree& tree, std::size_t leaf);

/// Per-transition controls along the same walk (one fewer than states).
std::vector<ControlInput> extract_controls(const Tree& tree, std::size_t leaf);

/// Sum of Euclidean segment lengths between consecutive positions.
double trajectory_length(const std::vector<State>& traj);

PlanResult plan_rrt(const Query& query, const OccupancyGrid& grid,
                    SeededRng& rng);

/// Bidirectional baseline: a kinodynamic rooted tree from the start and
/// a geometric tree from the goal, grown alternately. Once the pair is
/// close, the goal tree is GMM-fitted and steers rooted-tree sampling.
PlanResult plan_b2u(const Query& query, const OccupancyGrid& grid,
                    SeededRng& rng);

/// Multi-tree planner: heuristic trees explore locally, merge when they
/// touch, and each one that touches the rooted tree donates a GMM bias
/// before being deleted.
PlanResult plan_mtrrt(const Query& query, const OccupancyGrid& grid,
                      SeededRng& rng);

using PlannerFn = PlanResult (*)(const Query&, const OccupancyGrid&,
                                 SeededRng&);

/// Lookup by id ("rrt", "b2u", "mtrrt"); throws std::invalid_argument.
PlannerFn planner_by_name(const std::string& name);

const std::vector<std::string>& planner_names();

}  // namespace mtrrt
