#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "advtune/common.hpp"
#include "advtune/geometry.hpp"

namespace advtune {

inline constexpr int kClassCount = 7;
inline constexpr int kRoadClassId = 4;

// Semantic class with a canonical footprint (half-extents, meters) and a
// nominal height used for occlusion ordering.
struct ObjectClass {
  int id = 0;
  std::string name;
  double half_width = 0.0;
  double half_depth = 0.0;
  double height = 0.0;
};

// Desk-scale class table. Heights drive painter's-order occlusion; sky gets
// the smallest height so it only shows where nothing else covers a cell.
inline const std::array<ObjectClass, kClassCount>& default_object_classes() {
  static const std::array<ObjectClass, kClassCount> classes = {{
      {0, "vehicle", 2.25, 1.0, 1.6},
      {1, "pedestrian", 0.3, 0.3, 1.8},
      {2, "building", 2.0, 2.0, 12.0},
      {3, "vegetation", 1.0, 1.0, 3.0},
      {4, "road", 4.0, 1.0, 0.05},
      {5, "ground", 2.0, 2.0, 0.02},
      {6, "sky", 1.5, 1.5, 0.01},
  }};
  return classes;
}

// A marked point: class, planar position, orientation, footprint scale.
struct ObjectMark {
  ObjectClass cls;
  double x = 0.0;
  double y = 0.0;
  double orientation = 0.0;  // radians in [0, 2*pi)
  double scale = 1.0;        // multiplies the class footprint

  OrientedRect footprint() const {
    return {{x, y}, cls.half_width * scale, cls.half_depth * scale,
            orientation};
  }
};

struct SceneLayout {
  std::vector<ObjectMark> objects;
  double energy = 0.0;  // cached gibbs_energy of `objects`
};

struct WorldRegion {
  double min_x = -16.0;
  double min_y = -16.0;
  double max_x = 16.0;
  double max_y = 16.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

struct GibbsConfig {
  double k = 1000.0;        // overlap penalty coefficient
  double energy_cap = 1e6;  // saturation bound; exp(k*L) overflows doubles

  void validate() const {
    if (!(k > 0.0)) throw ConfigError("gibbs.k must be positive");
    if (!(energy_cap > 0.0) || !std::isfinite(energy_cap)) {
      throw ConfigError("gibbs.energy_cap must be positive and finite");
    }
  }
};

struct LayoutSampleOptions {
  double scale_min = 0.8;   // log-uniform footprint scale band
  double scale_max = 1.25;
  int retry_budget = 2000;  // candidate layouts before RetryExhausted
};

// The sampled photometry + camera + geometry-rate point. Vector order is the
// one documented by dimension_names(); it is the serialization contract for
// priors, KDE and reports.
struct SceneParameters {
  double light_intensity = 3.0;      // [0, 6]
  double sun_azimuth = 0.0;          // [0, 2*pi)
  double sun_elevation = 1.0;        // [0, pi/2]
  double color_temperature = 0.5;    // [0, 1]
  double scatter_density = 0.0;      // [0, 1]
  double scatter_coefficient = 0.5;  // [0, 1]
  double camera_height = 1.5;        // [1, 2] meters
  double camera_pitch = 0.0;         // radians
  double camera_fov = 1.0;           // radians
  std::array<double, kClassCount> object_rate_per_class{};  // per m^2

  static constexpr int dimension_count() { return 9 + kClassCount; }

  static const std::vector<std::string>& dimension_names() {
    static const std::vector<std::string> names = {
        "light_intensity", "sun_azimuth",      "sun_elevation",
        "color_temperature", "scatter_density", "scatter_coefficient",
        "camera_height",   "camera_pitch",     "camera_fov",
        "rate_vehicle",    "rate_pedestrian",  "rate_building",
        "rate_vegetation", "rate_road",        "rate_ground",
        "rate_sky"};
    return names;
  }

  std::vector<double> to_vector() const {
    std::vector<double> v = {light_intensity,  sun_azimuth,
                             sun_elevation,    color_temperature,
                             scatter_density,  scatter_coefficient,
                             camera_height,    camera_pitch,
                             camera_fov};
    v.insert(v.end(), object_rate_per_class.begin(),
             object_rate_per_class.end());
    return v;
  }

  static SceneParameters from_vector(std::span<const double> v) {
    if (v.size() != static_cast<std::size_t>(dimension_count())) {
      throw DimensionMismatch("SceneParameters::from_vector: expected " +
                              std::to_string(dimension_count()) + " values, got " +
                              std::to_string(v.size()));
    }
    SceneParameters p;
    p.light_intensity = v[0];
    p.sun_azimuth = v[1];
    p.sun_elevation = v[2];
    p.color_temperature = v[3];
    p.scatter_density = v[4];
    p.scatter_coefficient = v[5];
    p.camera_height = v[6];
    p.camera_pitch = v[7];
    p.camera_fov = v[8];
    for (int c = 0; c < kClassCount; ++c) p.object_rate_per_class[c] = v[9 + c];
    return p;
  }
};

// L(a, b): intersection area over the smaller footprint area, in [0, 1].
inline double overlap_fraction(const ObjectMark& a, const ObjectMark& b) {
  return overlap_fraction(a.footprint(), b.footprint());
}

// E(o) = sum over unordered pairs of min(exp(k*L) - 1, cap), itself capped.
inline double gibbs_energy(std::span<const ObjectMark> objects,
                           const GibbsConfig& cfg) {
  double total = 0.0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      const double l = overlap_fraction(objects[i], objects[j]);
      if (l <= 0.0) continue;
      const double term = std::expm1(cfg.k * l);  // +inf on overflow
      total += std::min(term, cfg.energy_cap);
      if (total >= cfg.energy_cap) return cfg.energy_cap;
    }
  }
  return std::min(total, cfg.energy_cap);
}

// Unnormalized layout density exp(-E); 1 for non-overlapping layouts, may
// underflow to 0 for strong overlaps, never negative.
inline double layout_density_unnorm(std::span<const ObjectMark> objects,
                                    const GibbsConfig& cfg) {
  return std::exp(-gibbs_energy(objects, cfg));
}

// One candidate layout draw from the marked Poisson process, without the
// Gibbs acceptance step.
inline std::vector<ObjectMark> propose_layout(
    const SceneParameters& theta, const WorldRegion& region, Rng& rng,
    std::span<const ObjectClass> classes, const LayoutSampleOptions& opts) {
  std::vector<ObjectMark> objects;
  const double log_smin = std::log(opts.scale_min);
  const double log_smax = std::log(opts.scale_max);
  for (const ObjectClass& cls : classes) {
    const int count = rng.poisson(
        theta.object_rate_per_class[static_cast<std::size_t>(cls.id)] *
        region.area());
    for (int n = 0; n < count; ++n) {
      ObjectMark mark;
      mark.cls = cls;
      mark.x = rng.uniform(region.min_x, region.max_x);
      mark.y = rng.uniform(region.min_y, region.max_y);
      if (cls.id == kRoadClassId) {
        // road orientations are axis-quantized
        mark.orientation =
            rng.uniform_index(2) == 0 ? 0.0 : std::numbers::pi / 2.0;
      } else {
        mark.orientation = rng.uniform(0.0, 2.0 * std::numbers::pi);
      }
      mark.scale = std::exp(rng.uniform(log_smin, log_smax));
      objects.push_back(std::move(mark));
    }
  }
  return objects;
}

// Rejection sampler over layouts: candidate marked-Poisson draws accepted
// with probability exp(-E). The density is bounded by 1, so no envelope
// constant is needed.
inline SceneLayout sample_layout(
    const SceneParameters& theta, const WorldRegion& region,
    const GibbsConfig& cfg, Rng& rng,
    std::span<const ObjectClass> classes = default_object_classes(),
    const LayoutSampleOptions& opts = {}) {
  for (int attempt = 0; attempt < opts.retry_budget; ++attempt) {
    std::vector<ObjectMark> objects =
        propose_layout(theta, region, rng, classes, opts);
    const double energy = gibbs_energy(objects, cfg);
    if (rng.bernoulli(std::exp(-energy))) {
      return SceneLayout{std::move(objects), energy};
    }
  }
  throw RetryExhausted(
      "sample_layout: no candidate accepted within " +
      std::to_string(opts.retry_budget) +
      " attempts; object rates too high for the region");
}

// Line-delimited layout export: comment header with region bounds and the
// seed, then one `class_id x y orientation scale` record per object.
inline void write_layout(std::ostream& os, const SceneLayout& layout,
                         const WorldRegion& region, std::uint64_t seed) {
  os << "# advtune-layout v1\n";
  os << "# region " << region.min_x << ' ' << region.min_y << ' '
     << region.max_x << ' ' << region.max_y << '\n';
  os << "# seed " << seed << '\n';
  os << "# columns class_id x y orientation scale\n";
  os.precision(17);
  for (const ObjectMark& m : layout.objects) {
    os << m.cls.id << ' ' << m.x << ' ' << m.y << ' ' << m.orientation << ' '
       << m.scale << '\n';
  }
}

inline SceneLayout read_layout(
    std::istream& is, const GibbsConfig& cfg,
    std::span<const ObjectClass> classes = default_object_classes()) {
  SceneLayout layout;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    int class_id = -1;
    ObjectMark mark;
    if (!(row >> class_id >> mark.x >> mark.y >> mark.orientation >>
          mark.scale)) {
      throw IoError("read_layout: malformed record: " + line);
    }
    if (class_id < 0 || class_id >= kClassCount) {
      throw IoError("read_layout: class id out of range: " +
                    std::to_string(class_id));
    }
    mark.cls = classes[static_cast<std::size_t>(class_id)];
    layout.objects.push_back(std::move(mark));
  }
  layout.energy = gibbs_energy(layout.objects, cfg);
  return layout;
}

}  // namespace advtune
