#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advtune/common.hpp"
#include "advtune/scene.hpp"

namespace advtune {

inline constexpr int kFeatureChannels = 1 + kClassCount;  // intensity + occupancy
inline constexpr std::uint8_t kBackgroundLabel = 255;

struct RenderConfig {
  int width = 32;
  int height = 32;
  // Camera-to-window model: the viewed ground window is a square of
  // half-extent view_scale * camera_height * tan(fov/2), shifted along y by
  // view_scale * camera_height * (tan(pitch) + kForwardLook).
  double view_scale = 16.0;
  // Ground-plane scattering depth: each row gets a viewing angle from the
  // pitch/fov sweep, and depth is cot(angle) capped at depth_cap, over
  // depth_ref. Rows toward the top of the grid look further along the
  // ground. Camera height enters the observation only through the view
  // window, never through the attenuation.
  double depth_ref = 2.0;
  double depth_cap = 8.0;

  void validate() const {
    if (width < 1 || height < 1) {
      throw ConfigError("render grid must be positive");
    }
    if (!(view_scale > 0.0) || !(depth_ref > 0.0) || !(depth_cap >= 0.0)) {
      throw ConfigError("render view/depth constants must be positive");
    }
  }
};

// Lowest viewing angle of the row sweep (radians below horizontal at the
// image top before pitch/fov adjustments).
inline constexpr double kBaseViewAngle = 0.35;

// Fixed forward component of the look direction; pitch modulates around it.
// The window slides ahead of the camera proportionally to height, so the
// overlap between the viewed window and the populated region shrinks as the
// camera rises.
inline constexpr double kForwardLook = 0.6;

// Grid observation: one intensity channel in [0, 1] plus a binary occupancy
// channel per class.
struct FeatureImage {
  int width = 0;
  int height = 0;
  std::vector<double> intensity;  // row-major, width*height
  std::array<std::vector<std::uint8_t>, kClassCount> occupancy;

  std::size_t cell(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
};

struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;  // class id or kBackgroundLabel

  std::size_t cell(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
};

struct ViewWindow {
  double cx = 0.0;
  double cy = 0.0;
  double half_extent = 0.0;

  Vec2 cell_center(int row, int col, int width, int height) const {
    const double fx = (col + 0.5) / width - 0.5;
    const double fy = (row + 0.5) / height - 0.5;
    return {cx + fx * 2.0 * half_extent, cy + fy * 2.0 * half_extent};
  }
};

inline ViewWindow view_window(const SceneParameters& theta,
                              const RenderConfig& cfg) {
  ViewWindow win;
  win.half_extent =
      cfg.view_scale * theta.camera_height * std::tan(theta.camera_fov / 2.0);
  win.cy = cfg.view_scale * theta.camera_height *
           (std::tan(theta.camera_pitch) + kForwardLook);
  return win;
}

namespace detail {

struct CellHit {
  // bitmask of covering classes plus the winner by painter's order
  std::array<bool, kClassCount> covered{};
  int winner = -1;  // class id, -1 for background
  double winner_orientation = 0.0;
};

inline CellHit probe_cell(Vec2 p, const SceneLayout& layout) {
  CellHit hit;
  double winner_height = -1.0;
  for (const ObjectMark& m : layout.objects) {
    if (!m.footprint().contains(p)) continue;
    hit.covered[static_cast<std::size_t>(m.cls.id)] = true;
    if (m.cls.height >= winner_height) {  // ties: later object paints over
      winner_height = m.cls.height;
      hit.winner = m.cls.id;
      hit.winner_orientation = m.orientation;
    }
  }
  return hit;
}

// Proxy shading in [0, 1], kept in a compressed band so lighting noise does
// not drown the other parameters. Ground responds only to elevation (1 at
// zenith); object cells mix that with a vertical face whose normal follows
// the mark orientation, giving azimuth a signal.
inline double cell_shading(const CellHit& hit, double sun_elevation,
                           double sun_azimuth) {
  const double top = 0.5 + 0.5 * std::sin(sun_elevation);
  if (hit.winner < 0) return top;
  const double face = std::max(
      0.0, std::cos(sun_elevation) *
               std::cos(sun_azimuth - hit.winner_orientation));
  return 0.5 * top + 0.5 * face;
}

}  // namespace detail

// Deterministic proxy observation: orthographic footprint rasterization in
// the camera-dependent window, painter's-order occlusion by class height,
// and intensity light/6 * shading * exp(-scatter_density * depth).
inline FeatureImage render(const SceneParameters& theta,
                           const SceneLayout& layout,
                           const RenderConfig& cfg) {
  cfg.validate();
  FeatureImage img;
  img.width = cfg.width;
  img.height = cfg.height;
  const std::size_t cells =
      static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height);
  img.intensity.assign(cells, 0.0);
  for (auto& channel : img.occupancy) channel.assign(cells, 0);

  const ViewWindow win = view_window(theta, cfg);
  for (int row = 0; row < cfg.height; ++row) {
    // rows sweep the viewing angle: top of the grid looks furthest out
    const double angle = std::clamp(
        kBaseViewAngle - theta.camera_pitch +
            ((row + 0.5) / cfg.height) * theta.camera_fov,
        0.05, std::numbers::pi / 2.0);
    const double reach = std::min(1.0 / std::tan(angle), cfg.depth_cap);
    const double depth = reach / cfg.depth_ref;
    for (int col = 0; col < cfg.width; ++col) {
      const Vec2 p = win.cell_center(row, col, cfg.width, cfg.height);
      const detail::CellHit hit = detail::probe_cell(p, layout);
      const std::size_t idx = img.cell(row, col);
      for (int c = 0; c < kClassCount; ++c) {
        if (hit.covered[static_cast<std::size_t>(c)]) {
          img.occupancy[static_cast<std::size_t>(c)][idx] = 1;
        }
      }
      const double shading =
          detail::cell_shading(hit, theta.sun_elevation, theta.sun_azimuth);
      const double value = (theta.light_intensity / 6.0) * shading *
                           std::exp(-theta.scatter_density * depth);
      img.intensity[idx] = std::clamp(value, 0.0, 1.0);
    }
  }
  return img;
}

// Per-cell argmax-by-height class id over the same window as render();
// background where no footprint covers the cell.
inline LabelImage render_labels(const SceneParameters& theta,
                                const SceneLayout& layout,
                                const RenderConfig& cfg) {
  cfg.validate();
  LabelImage img;
  img.width = cfg.width;
  img.height = cfg.height;
  img.labels.assign(
      static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height),
      kBackgroundLabel);
  const ViewWindow win = view_window(theta, cfg);
  for (int row = 0; row < cfg.height; ++row) {
    for (int col = 0; col < cfg.width; ++col) {
      const Vec2 p = win.cell_center(row, col, cfg.width, cfg.height);
      const detail::CellHit hit = detail::probe_cell(p, layout);
      if (hit.winner >= 0) {
        img.labels[img.cell(row, col)] = static_cast<std::uint8_t>(hit.winner);
      }
    }
  }
  return img;
}

// Fixed flattening order: intensity row-major, then each occupancy channel
// row-major in class-id order. Length = width * height * kFeatureChannels.
inline std::vector<double> flatten_features(const FeatureImage& img) {
  const std::size_t cells =
      static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  std::vector<double> flat;
  flat.reserve(cells * kFeatureChannels);
  flat.insert(flat.end(), img.intensity.begin(), img.intensity.end());
  for (const auto& channel : img.occupancy) {
    for (std::uint8_t v : channel) flat.push_back(v ? 1.0 : 0.0);
  }
  return flat;
}

inline FeatureImage unflatten_features(std::span<const double> flat, int width,
                                       int height) {
  const std::size_t cells =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (flat.size() != cells * kFeatureChannels) {
    throw DimensionMismatch("unflatten_features: got " +
                            std::to_string(flat.size()) + " values for a " +
                            std::to_string(width) + "x" + std::to_string(height) +
                            " grid");
  }
  FeatureImage img;
  img.width = width;
  img.height = height;
  img.intensity.assign(flat.begin(), flat.begin() + static_cast<long>(cells));
  for (int c = 0; c < kClassCount; ++c) {
    auto begin = flat.begin() + static_cast<long>(cells * (1 + static_cast<std::size_t>(c)));
    img.occupancy[static_cast<std::size_t>(c)].resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      img.occupancy[static_cast<std::size_t>(c)][i] = begin[static_cast<long>(i)] > 0.5 ? 1 : 0;
    }
  }
  return img;
}

}  // namespace advtune
