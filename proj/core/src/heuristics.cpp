#include "mtrrt/heuristics.hpp"

#include <cmath>
#include <numbers>

namespace mtrrt {

double SeededRng::normal(double mu, double sigma) {
  // Box-Muller; u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
}

Point random_state(const OccupancyGrid& grid, SeededRng& rng) {
  if (grid.free_cell_count() == 0) {
    throw NoFreeSpaceError("random_state: grid has no free cell");
  }
  while (true) {
    const Point p{rng.uniform(0.0, grid.width()),
                  rng.uniform(0.0, grid.height())};
    if (grid.is_free(p)) return p;
  }
}

Tree spawn_heuristic_tree(const OccupancyGrid& grid, SeededRng& rng,
                          std::optional<Point> at) {
  const Point root_pos = at ? *at : random_state(grid, rng);
  State root;
  root.pos = root_pos;
  root.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
  root.v = 0.0;
  root.omega = 0.0;
  return Tree(TreeKind::heuristic, root);
}

GmmModel fit_gmm(const Tree& tree, std::size_t kappa_max, double sigma) {
  if (tree.size() == 0 || sigma <= 0.0) {
    throw std::invalid_argument("fit_gmm: need a nonempty tree and sigma > 0");
  }
  const std::size_t n = tree.size();
  const std::size_t kappa = std::min(kappa_max, n);
  GmmModel model;
  model.components.reserve(kappa);
  if (kappa == n) {
    for (std::size_t i = 0; i < n; ++i) {
      model.components.push_back(GmmComponent{tree.state(i).pos, sigma, sigma});
    }
  } else {
    // Uniform stride, first node kept, last slot pinned to the last node.
    const std::size_t stride = n / kappa;
    for (std::size_t k = 0; k < kappa; ++k) {
      const std::size_t idx = k + 1 == kappa ? n - 1 : k * stride;
      model.components.push_back(
          GmmComponent{tree.state(idx).pos, sigma, sigma});
    }
  }
  return model;
}

double gmm_pdf(const GmmModel& model, const Point& p) {
  if (model.components.empty()) return 0.0;
  double sum = 0.0;
  for (const GmmComponent& c : model.components) {
    const double zx = (p.h - c.mu.h) / c.sigma_x;
    const double zy = (p.v - c.mu.v) / c.sigma_y;
    const double norm = 1.0 / (2.0 * std::numbers::pi * c.sigma_x * c.sigma_y);
    sum += norm * std::exp(-0.5 * (zx * zx + zy * zy));
  }
  return sum / static_cast<double>(model.components.size());
}

Point sample_heuristic_state(const GmmModel& model, const OccupancyGrid& grid,
                             SeededRng& rng) {
  if (model.components.empty()) {
    throw std::invalid_argument("sample_heuristic_state: empty model");
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto j = static_cast<std::size_t>(
        rng.uniform(0.0, static_cast<double>(model.components.size())));
    const GmmComponent& c = model.components[std::min(
        j, model.components.size() - 1)];
    const Point p{rng.normal(c.mu.h, c.sigma_x), rng.normal(c.mu.v, c.sigma_y)};
    if (grid.is_free(p)) return p;
  }
  return random_state(grid, rng);
}

}  // namespace mtrrt
