#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "mtrrt/forest.hpp"
#include "mtrrt/workspace.hpp"

namespace mtrrt {

/// Deterministic seeded generator: mt19937_64 with fixed uniform and
/// Box-Muller normal transforms, so identical seeds give identical draw
/// sequences everywhere (the std distributions are not portable).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  double normal(double mu, double sigma);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

struct NoFreeSpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform draw over free cells by rejection; always free. Throws
/// NoFreeSpaceError on a fully occupied grid.
Point random_state(const OccupancyGrid& grid, SeededRng& rng);

/// Single-node heuristic tree rooted at `at` when given, else at a
/// uniform free point; heading uniform in [-pi, pi), v = omega = 0.
Tree spawn_heuristic_tree(const OccupancyGrid& grid, SeededRng& rng,
                          std::optional<Point> at = std::nullopt);

struct GmmComponent {
  Point mu;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
};

/// Uniform-weight diagonal-covariance Gaussian mixture over selected
/// heuristic-tree node positions.
struct GmmModel {
  std::vector<GmmComponent> components;
  std::size_t kappa() const { return components.size(); }
};

/// One isotropic component per selected node: every node when the tree
/// fits within kappa_max, otherwise a uniform-stride subsample keeping
/// the first and last nodes.
GmmModel fit_gmm(const Tree& tree, std::size_t kappa_max, double sigma);

/// Mixture density (1/kappa) * sum_j N(p; mu_j, diag(sx_j^2, sy_j^2)).
double gmm_pdf(const GmmModel& model, const Point& p);

/// Draws a component uniformly, then a bivariate normal around its mean;
/// redraws while the point is occupied or out of bounds (100 attempts),
/// then falls back to uniform free sampling. Output is always free.
Point sample_heuristic_state(const GmmModel& model, const OccupancyGrid& grid,
                             SeededRng& rng);

}  // namespace mtrrt
