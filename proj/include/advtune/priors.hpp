#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "advtune/common.hpp"
#include "advtune/scene.hpp"

namespace advtune {

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  int bins = 32;
};

struct ParameterSpace {
  std::vector<Dimension> dims;

  void validate() const {
    if (dims.empty()) throw ConfigError("parameter space has no dimensions");
    for (const Dimension& d : dims) {
      if (!(d.lower < d.upper)) {
        throw ConfigError("dimension '" + d.name + "': lower must be < upper");
      }
      if (d.bins < 2) {
        throw ConfigError("dimension '" + d.name + "': bin_count must be >= 2");
      }
    }
  }

  int dimension_count() const { return static_cast<int>(dims.size()); }

  int bin_index(int dim, double value) const {
    const Dimension& d = dims[static_cast<std::size_t>(dim)];
    const double t = (value - d.lower) / (d.upper - d.lower);
    const int bin = static_cast<int>(t * d.bins);
    return std::clamp(bin, 0, d.bins - 1);
  }

  // Bin centers after mapping the dimension's range onto [0, 1].
  std::vector<double> normalized_centers(int dim) const {
    const Dimension& d = dims[static_cast<std::size_t>(dim)];
    std::vector<double> centers(static_cast<std::size_t>(d.bins));
    for (int i = 0; i < d.bins; ++i) {
      centers[static_cast<std::size_t>(i)] = (i + 0.5) / d.bins;
    }
    return centers;
  }

  double normalize(int dim, double value) const {
    const Dimension& d = dims[static_cast<std::size_t>(dim)];
    return (value - d.lower) / (d.upper - d.lower);
  }
};

// Permissible ranges for every scene parameter, in SceneParameters vector
// order. Light intensity spans [0, 6] (0 night, 6 noon) and camera height
// [1, 2] m (1.5 +- 0.5); the rest are plumbing defaults.
inline ParameterSpace default_parameter_space(int bins = 32,
                                              double rate_upper = 0.003) {
  const double two_pi = 2.0 * std::numbers::pi;
  ParameterSpace space;
  space.dims = {
      {"light_intensity", 0.0, 6.0, bins},
      {"sun_azimuth", 0.0, two_pi, bins},
      {"sun_elevation", 0.0, std::numbers::pi / 2.0, bins},
      {"color_temperature", 0.0, 1.0, bins},
      {"scatter_density", 0.0, 1.0, bins},
      {"scatter_coefficient", 0.0, 1.0, bins},
      {"camera_height", 1.0, 2.0, bins},
      {"camera_pitch", -0.3, 0.3, bins},
      {"camera_fov", 0.5, 1.5, bins},
  };
  for (int c = 0; c < kClassCount; ++c) {
    space.dims.push_back({SceneParameters::dimension_names()[9 + c], 0.0,
                          rate_upper, bins});
  }
  space.validate();
  return space;
}

// Max-normalized acceptance table for one dimension: entries in [0, 1] with
// max exactly 1, so a uniform proposal is a valid rejection envelope.
struct PriorTable {
  int dim = 0;
  std::vector<double> values;
};

struct JointPrior {
  ParameterSpace space;
  std::vector<PriorTable> tables;  // one per dimension, independence assumed
  int iteration = 0;
};

inline JointPrior uniform_prior(const ParameterSpace& space) {
  space.validate();
  JointPrior prior;
  prior.space = space;
  prior.iteration = 0;
  prior.tables.reserve(space.dims.size());
  for (int d = 0; d < space.dimension_count(); ++d) {
    prior.tables.push_back(
        {d, std::vector<double>(
                static_cast<std::size_t>(space.dims[static_cast<std::size_t>(d)].bins),
                1.0)});
  }
  return prior;
}

inline PriorTable max_normalize(const PriorTable& table) {
  double maxv = 0.0;
  for (double v : table.values) maxv = std::max(maxv, v);
  if (!(maxv > 0.0)) {
    throw DegenerateTable("max_normalize: table for dim " +
                          std::to_string(table.dim) + " is all zero");
  }
  PriorTable out{table.dim, table.values};
  for (double& v : out.values) v /= maxv;
  return out;
}

// Elementwise product with the likelihood tables, then per-dimension
// max-normalization; increments the iteration counter.
inline JointPrior bayes_update(const JointPrior& prior,
                               const std::vector<std::vector<double>>& likelihood) {
  if (likelihood.size() != prior.tables.size()) {
    throw LengthMismatch("bayes_update: " + std::to_string(likelihood.size()) +
                         " likelihood tables for " +
                         std::to_string(prior.tables.size()) + " dimensions");
  }
  JointPrior updated;
  updated.space = prior.space;
  updated.iteration = prior.iteration + 1;
  updated.tables.reserve(prior.tables.size());
  for (std::size_t d = 0; d < prior.tables.size(); ++d) {
    if (likelihood[d].size() != prior.tables[d].values.size()) {
      throw LengthMismatch("bayes_update: dim " + std::to_string(d) +
                           " shape mismatch");
    }
    PriorTable product{prior.tables[d].dim, prior.tables[d].values};
    for (std::size_t i = 0; i < product.values.size(); ++i) {
      product.values[i] *= likelihood[d][i];
    }
    updated.tables.push_back(max_normalize(product));
  }
  return updated;
}

// Rejection sampling for one dimension: uniform proposal over the range,
// accepted with the bin's table value. Some bin is 1, so the expected number
// of proposals is at most bin_count.
inline double sample_value(const JointPrior& prior, int dim, Rng& rng) {
  const Dimension& d = prior.space.dims[static_cast<std::size_t>(dim)];
  const std::vector<double>& table =
      prior.tables[static_cast<std::size_t>(dim)].values;
  for (long attempt = 0; attempt < 100000000L; ++attempt) {
    const double u = rng.uniform(d.lower, d.upper);
    if (rng.bernoulli(table[static_cast<std::size_t>(
            prior.space.bin_index(dim, u))])) {
      return u;
    }
  }
  throw DegenerateTable("sample_value: acceptance never triggered for dim " +
                        std::to_string(dim));
}

inline SceneParameters sample_theta(const JointPrior& prior, Rng& rng) {
  std::vector<double> values(static_cast<std::size_t>(prior.space.dimension_count()));
  for (int dim = 0; dim < prior.space.dimension_count(); ++dim) {
    values[static_cast<std::size_t>(dim)] = sample_value(prior, dim, rng);
  }
  return SceneParameters::from_vector(values);
}

// KL divergence between two tables viewed as distributions over their bins.
inline double table_kl(const std::vector<double>& p,
                       const std::vector<double>& q, double epsilon = 1e-9) {
  return kl_divergence(p, q, epsilon);
}

inline double table_kl(const PriorTable& p, const PriorTable& q,
                       double epsilon = 1e-9) {
  return kl_divergence(p.values, q.values, epsilon);
}

inline nlohmann::json prior_to_json(const JointPrior& prior) {
  nlohmann::json dims = nlohmann::json::array();
  for (const Dimension& d : prior.space.dims) {
    dims.push_back({{"name", d.name},
                    {"lower", d.lower},
                    {"upper", d.upper},
                    {"bins", d.bins}});
  }
  nlohmann::json tables = nlohmann::json::array();
  for (const PriorTable& t : prior.tables) tables.push_back(t.values);
  return {{"space", dims}, {"iteration", prior.iteration}, {"tables", tables}};
}

inline JointPrior prior_from_json(const nlohmann::json& j) {
  JointPrior prior;
  for (const auto& d : j.at("space")) {
    prior.space.dims.push_back({d.at("name").get<std::string>(),
                                d.at("lower").get<double>(),
                                d.at("upper").get<double>(),
                                d.at("bins").get<int>()});
  }
  prior.space.validate();
  prior.iteration = j.at("iteration").get<int>();
  const auto& tables = j.at("tables");
  if (tables.size() != prior.space.dims.size()) {
    throw ConfigError("prior_from_json: table count does not match space");
  }
  for (std::size_t d = 0; d < tables.size(); ++d) {
    PriorTable t{static_cast<int>(d), tables[d].get<std::vector<double>>()};
    if (t.values.size() !=
        static_cast<std::size_t>(prior.space.dims[d].bins)) {
      throw ConfigError("prior_from_json: dim " + std::to_string(d) +
                        " has wrong bin count");
    }
    prior.tables.push_back(std::move(t));
  }
  return prior;
}

}  // namespace advtune
