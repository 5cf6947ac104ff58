#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "advtune/common.hpp"
#include "advtune/render.hpp"

namespace advtune {

// Intensity histogram over [0, 1]. `values` holds raw counts until
// max-normalization divides by the peak frequency.
struct Histogram {
  int bins = 0;
  std::vector<double> values;
  bool max_normalized = false;
};

inline Histogram max_normalize(const Histogram& h) {
  double peak = 0.0;
  for (double v : h.values) peak = std::max(peak, v);
  if (!(peak > 0.0)) {
    throw DegenerateTable("histogram max_normalize: all bins empty");
  }
  Histogram out{h.bins, h.values, true};
  for (double& v : out.values) v /= peak;
  return out;
}

// Pools every intensity cell across the dataset, then max-normalizes.
inline Histogram intensity_histogram(std::span<const FeatureImage> images,
                                     int bins) {
  if (bins < 2) throw ConfigError("intensity_histogram: bins must be >= 2");
  if (images.empty()) throw EmptyDataset("intensity_histogram: no images");
  Histogram h{bins, std::vector<double>(static_cast<std::size_t>(bins), 0.0),
              false};
  for (const FeatureImage& img : images) {
    for (double v : img.intensity) {
      const double t = std::clamp(v, 0.0, 1.0);
      const int bin = std::min(static_cast<int>(t * bins), bins - 1);
      h.values[static_cast<std::size_t>(bin)] += 1.0;
    }
  }
  return max_normalize(h);
}

// Discrete KL on sum-normalized frequencies; normalization state is
// irrelevant because KL is scale-invariant in each argument.
inline double histogram_kl(const Histogram& p, const Histogram& q,
                           double epsilon = 1e-9) {
  if (p.bins != q.bins) {
    throw BinningMismatch("histogram_kl: " + std::to_string(p.bins) + " vs " +
                          std::to_string(q.bins) + " bins");
  }
  return kl_divergence(p.values, q.values, epsilon);
}

struct ClassProportions {
  std::array<double, kClassCount> fraction{};
  bool all_background = false;
};

// Fraction of non-background cells per class; sums to 1 unless every cell
// in the dataset is background (then the flag is set and fractions are 0).
inline ClassProportions class_pixel_proportions(
    std::span<const LabelImage> labels) {
  if (labels.empty()) throw EmptyDataset("class_pixel_proportions: no labels");
  std::array<std::size_t, kClassCount> counts{};
  std::size_t total = 0;
  for (const LabelImage& img : labels) {
    for (std::uint8_t v : img.labels) {
      if (v == kBackgroundLabel) continue;
      if (v >= kClassCount) {
        throw IoError("class_pixel_proportions: invalid class id " +
                      std::to_string(static_cast<int>(v)));
      }
      ++counts[v];
      ++total;
    }
  }
  ClassProportions result;
  if (total == 0) {
    result.all_background = true;
    return result;
  }
  for (int c = 0; c < kClassCount; ++c) {
    result.fraction[static_cast<std::size_t>(c)] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) /
        static_cast<double>(total);
  }
  return result;
}

}  // namespace advtune
