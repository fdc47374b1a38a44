#include "dcage/safe_zone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dcage/errors.hpp"

namespace dcage {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxArcStepRad = 0.2;
// Sweeps whose angular span gets this close to a full turn use the disk.
constexpr double kFullTurnGuard = 0.2;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be strictly positive (got " + std::to_string(v) + ")");
  }
}

Point2d on_circle(const Point2d& c, double r, double theta) {
  return c + r * Point2d{std::cos(theta), std::sin(theta)};
}

double angle_about(const Point2d& c, const Point2d& p) { return std::atan2(p.y() - c.y(), p.x() - c.x()); }

Point2d rotate_about(const Point2d& c, const Point2d& p, double phi) {
  const double cs = std::cos(phi);
  const double sn = std::sin(phi);
  const Point2d d = p - c;
  return c + Point2d{cs * d.x() - sn * d.y(), sn * d.x() + cs * d.y()};
}

double arc_step_rad(double arc_step, double radius) {
  return std::min(kMaxArcStepRad, arc_step / std::max(radius, 1e-9));
}

// Interior vertices of a circumscribed polyline from angle `from` to `to`
// (either direction). Cells are anchored at `from`.
void append_circumscribed_arc(Polygon2d& out, const Point2d& c, double r, double from, double to, double step) {
  const double span = std::abs(to - from);
  const double dir = to >= from ? 1.0 : -1.0;
  double start = 0.0;
  while (start < span - 1e-12) {
    const double width = std::min(step, span - start);
    if (width > 1e-9) {
      out.push_back(on_circle(c, r / std::cos(width / 2.0), from + dir * (start + width / 2.0)));
    }
    start += step;
  }
}

// Interior vertices of an inscribed polyline from `from` to `anchor`, with
// grid points at anchor + k * step.
void append_inscribed_arc_to_anchor(Polygon2d& out, const Point2d& c, double r, double from, double anchor,
                                    double step) {
  const double span = std::abs(from - anchor);
  const double dir = from >= anchor ? 1.0 : -1.0;
  auto k = static_cast<long>(std::floor(span / step));
  for (; k >= 1; --k) {
    const double off = static_cast<double>(k) * step;
    if (span - off < 1e-9) continue;
    out.push_back(on_circle(c, r, anchor + dir * off));
  }
}

ZonePolygon disk_zone(const Point2d& c, double r_out, DrivingMode label) {
  // Circumscribes every circumscribed arc produced by the polar construction.
  const double rho = r_out / std::cos(kMaxArcStepRad / 2.0);
  const int n = 64;
  const double cell = 2.0 * kPi / n;
  ZonePolygon z;
  z.mode_label = label;
  z.vertices.reserve(n);
  for (int i = 0; i < n; ++i) {
    z.vertices.push_back(on_circle(c, rho / std::cos(cell / 2.0), -kPi / 2.0 + (i + 0.5) * cell));
  }
  return z;
}

// Left turn (rotation center above the vehicle at (0, radius)).
ZonePolygon left_turn_zone(double radius, double sweep_len, double x_rear, double x_front, double half_w,
                           double arc_step, DrivingMode label) {
  const Point2d c{0.0, radius};
  const Point2d nl{0.0, half_w};  // nearest point to the center
  const Point2d rl{x_rear, half_w};
  const Point2d rr{x_rear, -half_w};
  const Point2d fl{x_front, half_w};
  const Point2d fr{x_front, -half_w};

  const double r_out = std::max((fr - c).norm(), (rr - c).norm());
  if (radius - half_w < 1e-6 || -x_rear > x_front) return disk_zone(c, r_out, label);

  const double phi = sweep_len / radius;
  const double extent = angle_about(c, fl) - angle_about(c, rl);
  if (extent + phi > 2.0 * kPi - kFullTurnGuard) return disk_zone(c, r_out, label);

  const double r_in = radius - half_w;
  const double r_rr = (rr - c).norm();
  const Point2d mirror_rr{-x_rear, -half_w};  // where the rear-right radius re-enters the right edge

  ZonePolygon z;
  z.mode_label = label;
  auto& v = z.vertices;

  // Trailing boundary of the initial footprint, from nearest to farthest point.
  v.push_back(nl);
  v.push_back(rl);
  v.push_back(rr);
  append_circumscribed_arc(v, c, r_rr, angle_about(c, rr), angle_about(c, mirror_rr), arc_step_rad(arc_step, r_rr));
  if ((fr - mirror_rr).norm() > 1e-9) v.push_back(mirror_rr);

  // Outer envelope traced by the front-right corner.
  const double theta_far = angle_about(c, fr);
  v.push_back(fr);
  append_circumscribed_arc(v, c, r_out, theta_far, theta_far + phi, arc_step_rad(arc_step, r_out));

  // Leading boundary of the final footprint.
  v.push_back(rotate_about(c, fr, phi));
  v.push_back(rotate_about(c, fl, phi));
  const double theta_near = -kPi / 2.0;
  v.push_back(rotate_about(c, nl, phi));

  // Inner envelope traced by the nearest point, back to the start.
  append_inscribed_arc_to_anchor(v, c, r_in, theta_near + phi, theta_near, arc_step_rad(arc_step, r_in));
  return z;
}

}  // namespace

Polygon2d VehicleGeometry::footprint() const {
  const double hw = width / 2.0;
  return {{rear_x(), -hw}, {front_x(), -hw}, {front_x(), hw}, {rear_x(), hw}};
}

void VehicleGeometry::validate() const {
  require_positive(wheelbase, "wheelbase");
  require_positive(width, "width");
  require_positive(front_overhang, "front_overhang");
  require_positive(rear_overhang, "rear_overhang");
  if (wheelbase <= 0.1) throw ConfigError("wheelbase must exceed 0.1 m");
}

void ZoneParams::validate() const {
  require_positive(decel_max, "decel_max");
  require_positive(react_time, "react_time");
  require_positive(front_margin, "front_margin");
  require_positive(lat_margin, "lat_margin");
  require_positive(speed_cap, "speed_cap");
  require_positive(arc_step, "arc_step");
  if (arc_step > 0.5) throw ConfigError("arc_step must not exceed 0.5 m");
}

double stopping_distance(double speed, const ZoneParams& params) {
  if (!(speed >= 0.0)) throw DomainError("stopping_distance: speed must be non-negative");
  return speed * params.react_time + speed * speed / (2.0 * params.decel_max);
}

ZonePolygon compute_safe_zone(double speed, double steering_angle, const VehicleGeometry& geom,
                              const ZoneParams& params, DrivingMode label) {
  geom.validate();
  params.validate();
  if (!(std::abs(steering_angle) < kPi / 2.0)) {
    throw DomainError("compute_safe_zone: |steering_angle| must be below pi/2");
  }
  const double sweep_len = stopping_distance(speed, params) + params.front_margin;
  const double half_w = geom.width / 2.0 + params.lat_margin;
  const double x_rear = geom.rear_x();
  const double x_front = geom.front_x();

  if (std::abs(steering_angle) < kStraightSteeringThreshold) {
    ZonePolygon z;
    z.mode_label = label;
    z.vertices = {{x_rear, -half_w}, {x_front + sweep_len, -half_w}, {x_front + sweep_len, half_w}, {x_rear, half_w}};
    return z;
  }

  const double radius = geom.wheelbase / std::tan(std::abs(steering_angle));
  ZonePolygon left = left_turn_zone(radius, sweep_len, x_rear, x_front, half_w, params.arc_step, label);
  return steering_angle > 0.0 ? left : mirror_y(left);
}

bool contains(const ZonePolygon& zone, const Point2d& p) { return polygon_contains(zone.vertices, p); }

ZonePolygon mirror_y(const ZonePolygon& zone) {
  ZonePolygon out;
  out.mode_label = zone.mode_label;
  out.vertices.reserve(zone.vertices.size());
  for (auto it = zone.vertices.rbegin(); it != zone.vertices.rend(); ++it) {
    out.vertices.emplace_back(it->x(), -it->y());
  }
  return out;
}

}  // namespace dcage
