#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "advtune/common.hpp"
#include "advtune/priors.hpp"
#include "advtune/scene.hpp"

namespace advtune {

struct WeightedSample {
  double value = 0.0;   // one theta dimension, range-normalized to [0, 1]
  double weight = 0.0;  // discriminator realness score in [0, 1]
};

// Weighted Gaussian KDE evaluated on a fixed grid. No division by the
// sample count: the table is max-normalized downstream, so only the shape
// matters. Empty input yields an all-zero table.
inline std::vector<double> weighted_kde(std::span<const WeightedSample> samples,
                                        double h,
                                        std::span<const double> grid) {
  if (!(h > 0.0)) throw ConfigError("weighted_kde: bandwidth must be positive");
  if (grid.empty()) throw ConfigError("weighted_kde: empty grid");
  const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
  const double inv_2h2 = 1.0 / (2.0 * h * h);
  std::vector<double> table(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (const WeightedSample& s : samples) {
      const double d = grid[g] - s.value;
      sum += s.weight * std::exp(-d * d * inv_2h2);
    }
    table[g] = norm * sum;
  }
  return table;
}

// Per-dimension realness likelihood on the prior bins: each theta dimension
// is normalized to [0, 1] by its range and smoothed over that dimension's
// bin centers with the classifier scores as weights. The score-weighted
// density is divided by the unweighted sample density on the same grid, so
// the table estimates the conditional realness E[score | theta] rather than
// score-mass times the current sampling density; multiplying the latter
// into the prior would re-apply the prior once per iteration and any
// fluctuation would compound instead of damping out.
inline std::vector<std::vector<double>> likelihood_tables(
    std::span<const SceneParameters> thetas, std::span<const double> scores,
    const ParameterSpace& space, double h = 0.1) {
  if (thetas.size() != scores.size()) {
    throw LengthMismatch("likelihood_tables: " + std::to_string(thetas.size()) +
                         " thetas vs " + std::to_string(scores.size()) +
                         " scores");
  }
  std::vector<std::vector<double>> theta_vectors;
  theta_vectors.reserve(thetas.size());
  for (const SceneParameters& t : thetas) theta_vectors.push_back(t.to_vector());

  std::vector<std::vector<double>> tables(
      static_cast<std::size_t>(space.dimension_count()));
  for (int dim = 0; dim < space.dimension_count(); ++dim) {
    std::vector<WeightedSample> scored(thetas.size());
    std::vector<WeightedSample> density(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double value =
          space.normalize(dim, theta_vectors[i][static_cast<std::size_t>(dim)]);
      scored[i] = {value, scores[i]};
      density[i] = {value, 1.0};
    }
    const std::vector<double> grid = space.normalized_centers(dim);
    std::vector<double> table = weighted_kde(scored, h, grid);
    const std::vector<double> mass = weighted_kde(density, h, grid);
    for (std::size_t g = 0; g < table.size(); ++g) {
      table[g] = mass[g] > 0.0 ? table[g] / mass[g] : 0.0;
    }
    tables[static_cast<std::size_t>(dim)] = std::move(table);
  }
  return tables;
}

}  // namespace advtune
