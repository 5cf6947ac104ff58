#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "advtune/common.hpp"
#include "advtune/stats.hpp"

using namespace advtune;

namespace {

FeatureImage image_with_intensity(std::vector<double> values, int width,
                                  int height) {
  FeatureImage img;
  img.width = width;
  img.height = height;
  img.intensity = std::move(values);
  for (auto& channel : img.occupancy) {
    channel.assign(img.intensity.size(), 0);
  }
  return img;
}

LabelImage labels_of(std::vector<std::uint8_t> values, int width, int height) {
  LabelImage img;
  img.width = width;
  img.height = height;
  img.labels = std::move(values);
  return img;
}

}  // namespace

TEST_CASE("all-zero images pile into the first bin", "[stats]") {
  const std::vector<FeatureImage> images = {
      image_with_intensity(std::vector<double>(16, 0.0), 4, 4),
      image_with_intensity(std::vector<double>(16, 0.0), 4, 4)};
  const Histogram h = intensity_histogram(images, 10);
  CHECK(h.max_normalized);
  CHECK(h.values[0] == 1.0);
  for (std::size_t b = 1; b < h.values.size(); ++b) CHECK(h.values[b] == 0.0);

  CHECK_THROWS_AS(intensity_histogram({}, 10), EmptyDataset);
}

TEST_CASE("uniform cells give a near-flat normalized histogram", "[stats]") {
  Rng rng(42);
  std::vector<double> cells(1000000);
  for (double& v : cells) v = rng.uniform01();
  const std::vector<FeatureImage> images = {
      image_with_intensity(std::move(cells), 1000, 1000)};
  const Histogram h = intensity_histogram(images, 64);
  for (double v : h.values) {
    CHECK(v > 0.95);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("pooling is order invariant and matches the single-image case",
          "[stats]") {
  Rng rng(43);
  std::vector<double> a_cells(64), b_cells(64);
  for (double& v : a_cells) v = rng.uniform01();
  for (double& v : b_cells) v = rng.uniform01();
  const FeatureImage a = image_with_intensity(a_cells, 8, 8);
  const FeatureImage b = image_with_intensity(b_cells, 8, 8);

  const std::vector<FeatureImage> ab = {a, b};
  const std::vector<FeatureImage> ba = {b, a};
  CHECK(intensity_histogram(ab, 16).values ==
        intensity_histogram(ba, 16).values);

  const std::vector<FeatureImage> only_a = {a};
  const Histogram single = intensity_histogram(only_a, 16);
  CHECK(single.values == intensity_histogram(std::vector<FeatureImage>{a}, 16).values);
}

TEST_CASE("histogram KL closed forms and binning mismatch", "[stats]") {
  const Histogram p{2, {1.0, 0.0}, false};
  const Histogram q{2, {0.5, 0.5}, false};
  CHECK(histogram_kl(p, p) == 0.0);
  CHECK(histogram_kl(p, q) == Catch::Approx(std::log(2.0)).epsilon(1e-6));
  // asymmetric by construction: the reverse direction differs
  CHECK(histogram_kl(q, p) != Catch::Approx(histogram_kl(p, q)));

  const Histogram other{3, {1.0, 1.0, 1.0}, false};
  CHECK_THROWS_AS(histogram_kl(p, other), BinningMismatch);
}

TEST_CASE("max-normalization state does not change histogram KL", "[stats]") {
  Rng rng(44);
  Histogram p{16, std::vector<double>(16), false};
  Histogram q{16, std::vector<double>(16), false};
  for (double& v : p.values) v = rng.uniform(1.0, 100.0);
  for (double& v : q.values) v = rng.uniform(1.0, 100.0);
  const double raw = histogram_kl(p, q);
  const double normalized = histogram_kl(max_normalize(p), max_normalize(q));
  CHECK(raw == Catch::Approx(normalized).epsilon(1e-12));
}

TEST_CASE("class proportions handle background and full coverage", "[stats]") {
  const std::vector<LabelImage> background = {
      labels_of(std::vector<std::uint8_t>(16, kBackgroundLabel), 4, 4)};
  const ClassProportions empty = class_pixel_proportions(background);
  CHECK(empty.all_background);
  for (double f : empty.fraction) CHECK(f == 0.0);

  const std::vector<LabelImage> road = {
      labels_of(std::vector<std::uint8_t>(16, 4), 4, 4)};
  const ClassProportions full = class_pixel_proportions(road);
  CHECK(!full.all_background);
  CHECK(full.fraction[4] == 1.0);
  for (int c = 0; c < kClassCount; ++c) {
    if (c != 4) CHECK(full.fraction[static_cast<std::size_t>(c)] == 0.0);
  }

  CHECK_THROWS_AS(class_pixel_proportions({}), EmptyDataset);
}

TEST_CASE("class proportions match an independent counting pass", "[stats]") {
  Rng rng(45);
  std::vector<LabelImage> labels;
  std::array<long, kClassCount> oracle{};
  long oracle_total = 0;
  for (int img = 0; img < 5; ++img) {
    std::vector<std::uint8_t> cells(100);
    for (std::uint8_t& v : cells) {
      if (rng.bernoulli(0.3)) {
        v = kBackgroundLabel;
      } else {
        v = static_cast<std::uint8_t>(rng.uniform_index(kClassCount));
        ++oracle[v];
        ++oracle_total;
      }
    }
    labels.push_back(labels_of(std::move(cells), 10, 10));
  }
  const ClassProportions got = class_pixel_proportions(labels);
  REQUIRE(oracle_total > 0);
  double sum = 0.0;
  for (int c = 0; c < kClassCount; ++c) {
    CHECK(got.fraction[static_cast<std::size_t>(c)] ==
          Catch::Approx(static_cast<double>(oracle[static_cast<std::size_t>(c)]) /
                        static_cast<double>(oracle_total))
              .margin(1e-15));
    sum += got.fraction[static_cast<std::size_t>(c)];
  }
  CHECK(sum == Catch::Approx(1.0).margin(1e-12));
}
