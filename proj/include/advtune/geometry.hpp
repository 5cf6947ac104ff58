#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace advtune {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Rectangle centered at `center`, half-extents along its local axes, rotated
// by `angle` radians about the center.
struct OrientedRect {
  Vec2 center;
  double half_w = 0.0;
  double half_d = 0.0;
  double angle = 0.0;

  double area() const { return 4.0 * half_w * half_d; }

  // Counterclockwise corner order.
  std::array<Vec2, 4> corners() const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    auto rot = [&](double lx, double ly) -> Vec2 {
      return {center.x + c * lx - s * ly, center.y + s * lx + c * ly};
    };
    return {rot(half_w, half_d), rot(-half_w, half_d), rot(-half_w, -half_d),
            rot(half_w, -half_d)};
  }

  bool contains(Vec2 p) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    return std::abs(lx) <= half_w && std::abs(ly) <= half_d;
  }
};

inline double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    twice += a.x * b.y - a.y * b.x;
  }
  return std::abs(twice) * 0.5;
}

// Sutherland-Hodgman clip of a convex subject polygon against one directed
// edge a->b; interior is the left half-plane (CCW clip polygon).
inline std::vector<Vec2> clip_against_edge(const std::vector<Vec2>& subject,
                                           Vec2 a, Vec2 b) {
  std::vector<Vec2> out;
  out.reserve(subject.size() + 2);
  const Vec2 edge = b - a;
  for (std::size_t i = 0; i < subject.size(); ++i) {
    const Vec2 p = subject[i];
    const Vec2 q = subject[(i + 1) % subject.size()];
    const double side_p = cross(edge, p - a);
    const double side_q = cross(edge, q - a);
    auto intersect = [&]() -> Vec2 {
      const double denom = cross(edge, q - p);
      if (denom == 0.0) return p;  // collinear segment, endpoints suffice
      const double t = cross(edge, a - p) / denom;
      return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
    };
    if (side_p >= 0.0) {
      out.push_back(p);
      if (side_q < 0.0) out.push_back(intersect());
    } else if (side_q >= 0.0) {
      out.push_back(intersect());
    }
  }
  return out;
}

inline double intersection_area(const OrientedRect& a, const OrientedRect& b) {
  const auto ca = a.corners();
  std::vector<Vec2> poly(ca.begin(), ca.end());
  const auto cb = b.corners();
  for (int i = 0; i < 4 && !poly.empty(); ++i) {
    poly = clip_against_edge(poly, cb[i], cb[(i + 1) % 4]);
  }
  return polygon_area(poly);
}

// Relative mutual overlap: intersection area over the smaller footprint
// area. 0 for disjoint rectangles, 1 when the smaller one is contained.
inline double overlap_fraction(const OrientedRect& a, const OrientedRect& b) {
  const double denom = std::min(a.area(), b.area());
  if (denom <= 0.0) return 0.0;
  const double inter = intersection_area(a, b);
  return std::clamp(inter / denom, 0.0, 1.0);
}

}  // namespace advtune
