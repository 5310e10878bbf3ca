#include "mtrrt/kinodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mtrrt/forest.hpp"

namespace mtrrt {

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = theta - two_pi * std::floor((theta + std::numbers::pi) / two_pi);
  // floor rounding can land exactly on pi
  if (w >= std::numbers::pi) w -= two_pi;
  return w;
}

VelocityWindow velocity_window(double current, double alpha, double dt,
                               double lo, double hi) {
  return VelocityWindow{std::clamp(current - alpha * dt, lo, hi),
                        std::clamp(current + alpha * dt, lo, hi)};
}

double discretize(double min, double max, int n) { return (max - min) / n; }

State propagate(const State& x, const ControlInput& u, double dt) {
  State out;
  out.theta = wrap_angle(x.theta + u.omega * dt);
  out.pos.h = x.pos.h + u.v * dt * std::cos(out.theta);
  out.pos.v = x.pos.v + u.v * dt * std::sin(out.theta);
  out.v = u.v;
  out.omega = u.omega;
  return out;
}

double cost(const State& x_new, const Point& x_rand, const Point& start,
            const Point& goal, const KinodynamicParams& params) {
  if (start.h == goal.h && start.v == goal.v) {
    throw DegenerateCostError("cost: start == goal, distance normalizer is 0");
  }
  const double dh = x_rand.h - x_new.pos.h;
  const double dv = x_rand.v - x_new.pos.v;
  if (dh == 0.0 && dv == 0.0) {
    throw DegenerateCostError("cost: candidate coincides with sample, bearing undefined");
  }
  const double cost_distance =
      distance(x_new.pos, x_rand) / distance(start, goal);
  const double cost_angle = wrap_angle(std::atan2(dv, dh) - x_new.theta);
  return params.w1 * cost_distance + params.w2 * std::abs(cost_angle);
}

std::optional<std::size_t> extend(Tree& tree, const Point& x_rand,
                                  const OccupancyGrid& grid,
                                  const Point& start, const Point& goal,
                                  const KinodynamicParams& params,
                                  PlanCounters& counters,
                                  std::optional<std::size_t> near_hint) {
  const unsigned total = static_cast<unsigned>(params.n_v + 1) *
                         static_cast<unsigned>(params.n_omega + 1);
  // Spent-control pruning needs one mask bit per candidate; with an
  // oversized control grid it degrades to plain nearest-neighbor search.
  const bool prune = total <= 64;
  if (prune && tree.exhausted_count() == tree.size()) return std::nullopt;
  const std::size_t near_idx =
      near_hint ? *near_hint
                : (prune ? tree.nearest_extendable(x_rand)
                         : nearest_neighbor(tree, x_rand));
  const State& x_near = tree.state(near_idx);
  const std::uint64_t spent = prune ? tree.spent_controls(near_idx) : 0;

  const VelocityWindow vw =
      velocity_window(x_near.v, params.alpha_v, params.dt,
                      params.v_min_global, params.v_max_global);
  const VelocityWindow ww =
      velocity_window(x_near.omega, params.alpha_omega, params.dt,
                      -params.omega_max_global, params.omega_max_global);
  const double dv = discretize(vw.min, vw.max, params.n_v);
  const double dw = discretize(ww.min, ww.max, params.n_omega);

  struct Candidate {
    State state;
    ControlInput control;
    double cost;
    unsigned index;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(static_cast<std::size_t>(params.n_v + 1) *
                     (params.n_omega + 1));
  for (int i = 0; i <= params.n_v; ++i) {
    for (int j = 0; j <= params.n_omega; ++j) {
      const ControlInput u{vw.min + i * dv, ww.min + j * dw};
      const State cand = propagate(x_near, u, params.dt);
      // A candidate landing exactly on the sample is a perfect hit.
      double c = 0.0;
      if (cand.pos.h != x_rand.h || cand.pos.v != x_rand.v) {
        c = cost(cand, x_rand, start, goal, params);
      }
      candidates.push_back(Candidate{
          cand, u, c,
          static_cast<unsigned>(i) * (params.n_omega + 1) +
              static_cast<unsigned>(j)});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.cost < b.cost;
                   });
  for (const Candidate& cand : candidates) {
    if (prune && (spent >> cand.index & 1)) continue;
    if (segment_collision_free(grid, x_near.pos, cand.state.pos)) {
      if (prune) tree.spend_control(near_idx, cand.index, total);
      return tree.add_node(cand.state, near_idx, cand.control);
    }
    if (prune) tree.spend_control(near_idx, cand.index, total);
    ++counters.invalid_connections;
  }
  return std::nullopt;
}

}  // namespace mtrrt
