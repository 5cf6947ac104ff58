#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "advtune/common.hpp"
#include "advtune/geometry.hpp"
#include "support/oracles.hpp"

using advtune::OrientedRect;
using advtune::overlap_fraction;

namespace {
OrientedRect unit_square(double x, double y, double angle = 0.0) {
  return {{x, y}, 0.5, 0.5, angle};
}
}  // namespace

TEST_CASE("identical squares fully overlap", "[geometry]") {
  const OrientedRect a = unit_square(1.0, -2.0);
  CHECK(overlap_fraction(a, a) == Catch::Approx(1.0));
}

TEST_CASE("distant squares are disjoint", "[geometry]") {
  CHECK(overlap_fraction(unit_square(0, 0), unit_square(10, 0)) == 0.0);
}

TEST_CASE("half-offset squares overlap by one half", "[geometry]") {
  const OrientedRect a = unit_square(0, 0);
  const OrientedRect b = unit_square(0.5, 0);
  const double got = overlap_fraction(a, b);
  CHECK(got == Catch::Approx(0.5).margin(1e-12));
  const double oracle = oracles::rasterized_overlap_fraction(a, b, 1000);
  CHECK(got == Catch::Approx(oracle).margin(1e-3));
}

TEST_CASE("containment of the smaller rectangle gives 1", "[geometry]") {
  const OrientedRect big{{0, 0}, 3.0, 3.0, 0.3};
  const OrientedRect small{{0.5, -0.2}, 0.4, 0.7, 1.1};
  CHECK(overlap_fraction(big, small) == Catch::Approx(1.0));
}

TEST_CASE("overlap is symmetric and matches the rasterization oracle",
          "[geometry]") {
  advtune::Rng rng(20240817);
  for (int trial = 0; trial < 40; ++trial) {
    const OrientedRect a{{rng.uniform(-2, 2), rng.uniform(-2, 2)},
                         rng.uniform(0.2, 1.5),
                         rng.uniform(0.2, 1.5),
                         rng.uniform(0.0, 2.0 * std::numbers::pi)};
    const OrientedRect b{{rng.uniform(-2, 2), rng.uniform(-2, 2)},
                         rng.uniform(0.2, 1.5),
                         rng.uniform(0.2, 1.5),
                         rng.uniform(0.0, 2.0 * std::numbers::pi)};
    const double ab = overlap_fraction(a, b);
    const double ba = overlap_fraction(b, a);
    CHECK(ab == Catch::Approx(ba).margin(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    const double oracle = oracles::rasterized_overlap_fraction(a, b, 500);
    CHECK(ab == Catch::Approx(oracle).margin(5e-3));
  }
}

TEST_CASE("rotated rectangle intersection area is exact on a known case",
          "[geometry]") {
  // 45-degree unit square centered on an axis-aligned one: intersection is
  // the rotated square minus four corner triangles; here the rotated square
  // (diagonal sqrt(2)) fits inside, so the area is its own area.
  const OrientedRect axis{{0, 0}, 0.5, 0.5, 0.0};
  const OrientedRect rotated{{0, 0}, 0.35, 0.35, std::numbers::pi / 4.0};
  const double inter = advtune::intersection_area(axis, rotated);
  CHECK(inter == Catch::Approx(rotated.area()).margin(1e-12));
  CHECK(overlap_fraction(axis, rotated) == Catch::Approx(1.0).margin(1e-12));
}
