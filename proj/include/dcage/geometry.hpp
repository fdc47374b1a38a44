#pragma once

// Planar geometry primitives shared by the safe zone, the LiDAR pipeline and
// the simulator. Points are Eigen column vectors; polygons are plain vectors
// of points in counterclockwise order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace dcage {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Point3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Polygon = std::vector<Point2<Scalar>>;

using Point2d = Point2<double>;
using Point3d = Point3<double>;
using Polygon2d = Polygon<double>;

/// z-component of the 2D cross product (b - a) x (c - a).
template <typename Scalar>
inline Scalar cross(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

/// Shoelace formula; positive for counterclockwise polygons.
template <typename Scalar>
Scalar signed_area(const Polygon<Scalar>& poly) {
  Scalar acc{0};
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    acc += poly[j].x() * poly[i].y() - poly[i].x() * poly[j].y();
  }
  return acc / Scalar{2};
}

template <typename Scalar>
Point2<Scalar> centroid(const Polygon<Scalar>& poly) {
  const Scalar area = signed_area(poly);
  Point2<Scalar> c = Point2<Scalar>::Zero();
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Scalar w = poly[j].x() * poly[i].y() - poly[i].x() * poly[j].y();
    c += (poly[j] + poly[i]) * w;
  }
  return c / (Scalar{6} * area);
}

template <typename Scalar>
bool on_segment(const Point2<Scalar>& p, const Point2<Scalar>& a, const Point2<Scalar>& b,
                Scalar eps = Scalar{1e-9}) {
  const Point2<Scalar> ab = b - a;
  const Scalar len = ab.norm();
  if (len <= eps) return (p - a).norm() <= eps;
  if (std::abs(cross(a, b, p)) / len > eps) return false;
  const Scalar t = (p - a).dot(ab) / (len * len);
  return t >= -eps && t <= Scalar{1} + eps;
}

/// Point-in-polygon by winding number; boundary points count as inside.
template <typename Scalar>
bool polygon_contains(const Polygon<Scalar>& poly, const Point2<Scalar>& p) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  int winding = 0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[j];
    const auto& b = poly[i];
    if (on_segment(p, a, b)) return true;
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && cross(a, b, p) > Scalar{0}) ++winding;
    } else if (b.y() <= p.y() && cross(a, b, p) < Scalar{0}) {
      --winding;
    }
  }
  return winding != 0;
}

template <typename Scalar>
Scalar point_segment_distance(const Point2<Scalar>& p, const Point2<Scalar>& a,
                              const Point2<Scalar>& b) {
  const Point2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  if (len2 == Scalar{0}) return (p - a).norm();
  const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar{0}, Scalar{1});
  return (p - (a + t * ab)).norm();
}

/// Distance to the polygon region; zero when p is inside.
template <typename Scalar>
Scalar point_polygon_distance(const Polygon<Scalar>& poly, const Point2<Scalar>& p) {
  if (polygon_contains(poly, p)) return Scalar{0};
  Scalar best = std::numeric_limits<Scalar>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    best = std::min(best, point_segment_distance(p, poly[j], poly[i]));
  }
  return best;
}

namespace detail {
template <typename Scalar>
bool proper_intersect(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c,
                      const Point2<Scalar>& d) {
  const Scalar d1 = cross(c, d, a);
  const Scalar d2 = cross(c, d, b);
  const Scalar d3 = cross(a, b, c);
  const Scalar d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return (d1 == 0 && on_segment(a, c, d, Scalar{0})) || (d2 == 0 && on_segment(b, c, d, Scalar{0})) ||
         (d3 == 0 && on_segment(c, a, b, Scalar{0})) || (d4 == 0 && on_segment(d, a, b, Scalar{0}));
}
}  // namespace detail

/// O(n^2) check that no two non-adjacent edges touch.
template <typename Scalar>
bool is_simple(const Polygon<Scalar>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    if ((b - a).squaredNorm() == Scalar{0}) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (detail::proper_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Intersection parameter t >= 0 of the ray origin + t * dir with segment [a, b].
template <typename Scalar>
bool ray_segment_hit(const Point2<Scalar>& origin, const Point2<Scalar>& dir, const Point2<Scalar>& a,
                     const Point2<Scalar>& b, Scalar& t_out) {
  const Point2<Scalar> e = b - a;
  const Scalar denom = dir.x() * e.y() - dir.y() * e.x();
  if (std::abs(denom) < Scalar{1e-15}) return false;
  const Point2<Scalar> w = a - origin;
  const Scalar t = (w.x() * e.y() - w.y() * e.x()) / denom;
  const Scalar u = (w.x() * dir.y() - w.y() * dir.x()) / denom;
  if (t < Scalar{0} || u < Scalar{0} || u > Scalar{1}) return false;
  t_out = t;
  return true;
}

/// Rigid transform of a vehicle-frame point into the world frame.
template <typename Scalar>
Point2<Scalar> to_world(const Point2<Scalar>& local, const Point2<Scalar>& origin, Scalar heading) {
  const Scalar c = std::cos(heading);
  const Scalar s = std::sin(heading);
  return origin + Point2<Scalar>{c * local.x() - s * local.y(), s * local.x() + c * local.y()};
}

template <typename Scalar>
Point2<Scalar> to_local(const Point2<Scalar>& world, const Point2<Scalar>& origin, Scalar heading) {
  const Scalar c = std::cos(heading);
  const Scalar s = std::sin(heading);
  const Point2<Scalar> d = world - origin;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

}  // namespace dcage
