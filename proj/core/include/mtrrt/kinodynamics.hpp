#pragma once

#include <cstdint>
#include <optional>

#include "mtrrt/workspace.hpp"

namespace mtrrt {

/// Robot configuration: planar position, heading, and the (v, omega)
/// pair that produced it. theta is kept in [-pi, pi).
struct State {
  Point pos;
  double theta = 0.0;
  double v = 0.0;      // linear velocity, px per step
  double omega = 0.0;  // angular velocity, rad per step
};

struct ControlInput {
  double v = 0.0;
  double omega = 0.0;
};

struct KinodynamicParams {
  double alpha_v = 2.0;                  // linear acceleration bound
  double alpha_omega = 0.7853981633974483;  // pi/4, angular accel bound
  double dt = 1.0;
  int n_v = 3;      // linear discretization fraction
  int n_omega = 4;  // angular discretization fraction
  double v_min_global = 0.0;
  double v_max_global = 8.0;
  double omega_max_global = 1.0471975511965976;  // pi/3
  double w1 = 1.0;
  double w2 = 0.3;
};

/// Per-trial counters; monotone during a run.
struct PlanCounters {
  std::uint64_t iterations = 0;
  std::uint64_t invalid_connections = 0;
  double wall_time = 0.0;  // seconds, planning loop only
};

/// Wraps an angle to [-pi, pi).
double wrap_angle(double theta);

struct VelocityWindow {
  double min = 0.0;
  double max = 0.0;
};

/// Reachable velocity range after one time step under an acceleration
/// bound, clamped to the global [lo, hi] limits.
VelocityWindow velocity_window(double current, double alpha, double dt,
                               double lo, double hi);

/// Step size splitting [min, max] into n equal fractions (n+1 candidates).
double discretize(double min, double max, int n);

/// Unicycle step, turn-then-translate Euler integration.
State propagate(const State& x, const ControlInput& u, double dt);

struct DegenerateCostError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Distance-plus-angle deviation of a candidate state from the sample:
/// w1 * ||pos - x_rand|| / ||start - goal|| + w2 * |bearing - theta|,
/// bearing taken from the candidate toward the sample via atan2 and
/// wrapped to [-pi, pi). Throws DegenerateCostError when the candidate
/// sits exactly on x_rand or start == goal.
double cost(const State& x_new, const Point& x_rand, const Point& start,
            const Point& goal, const KinodynamicParams& params);

class Tree;

/// Grows the tree one node toward x_rand: enumerates the full
/// (n_v+1) x (n_omega+1) control grid from the nearest node, sorts
/// candidates by cost (ties in enumeration order, v-index major), and
/// commits the first collision-free one. Candidates rejected for
/// collision before the winner bump counters.invalid_connections.
/// Returns the new node index, or nothing if every tried candidate
/// collides. `near_hint`, when given, must be the index the internal
/// nearest-node search would choose; it exists so a caller that already
/// ran that search does not pay for it twice.
std::optional<std::size_t> extend(Tree& tree, const Point& x_rand,
                                  const OccupancyGrid& grid,
                                  const Point& start, const Point& goal,
                                  const KinodynamicParams& params,
                                  PlanCounters& counters,
                                  std::optional<std::size_t> near_hint =
                                      std::nullopt);

}  // namespace mtrrt
