#pragma once

#include <vector>

#include "dcage/driving_mode.hpp"
#include "dcage/geometry.hpp"

namespace dcage {

/// Rigid body of the vehicle. The vehicle frame has its origin at the
/// rear-axle center, x forward and y to the left.
struct VehicleGeometry {
  double wheelbase{2.0};
  double width{1.2};
  double front_overhang{0.5};  // front axle to front bumper
  double rear_overhang{0.5};   // rear axle to rear bumper

  double front_x() const { return wheelbase + front_overhang; }
  double rear_x() const { return -rear_overhang; }
  Point2d front_bumper_mid() const { return {front_x(), 0.0}; }

  /// Footprint corners, counterclockwise from rear-right.
  Polygon2d footprint() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct ZoneParams {
  double decel_max{2.0};     // m/s^2
  double react_time{0.2};    // s
  double front_margin{1.0};  // m
  double lat_margin{0.3};    // m, each side
  double speed_cap{3.0};     // m/s
  double arc_step{0.25};     // m

  void validate() const;

  static ZoneParams fad_defaults() { return {}; }
  static ZoneParams lad_defaults() { return {2.0, 0.2, 1.0, 0.15, 1.0, 0.25}; }
};

/// Counterclockwise simple polygon in the vehicle frame.
struct ZonePolygon {
  Polygon2d vertices;
  DrivingMode mode_label{DrivingMode::FAD};
};

/// Reaction distance plus constant-deceleration braking distance.
/// Throws DomainError for negative speed.
double stopping_distance(double speed, const ZoneParams& params);

/// Below this steering magnitude the path is treated as straight.
inline constexpr double kStraightSteeringThreshold = 1e-3;

/// Footprint inflated by `lat_margin` and swept along the kinematic-bicycle
/// arc for `stopping_distance(speed) + front_margin`.
///
/// For a turn, the sweep is built in polar coordinates around the
/// instantaneous center of rotation: the trailing boundary comes from the
/// initial footprint, the leading boundary from the final one, and the outer
/// and inner envelopes are circular arcs. Outer arcs are circumscribed and the
/// inner arc inscribed, so the polygon always covers the continuous sweep and
/// grows monotonically with speed. Degenerate turns (rotation center inside
/// the footprint or a sweep approaching a full revolution) fall back to the
/// enclosing disk.
ZonePolygon compute_safe_zone(double speed, double steering_angle, const VehicleGeometry& geom,
                              const ZoneParams& params, DrivingMode label = DrivingMode::FAD);

/// Inside or on the boundary.
bool contains(const ZonePolygon& zone, const Point2d& p);

/// Mirror about the vehicle x-axis, keeping counterclockwise order.
ZonePolygon mirror_y(const ZonePolygon& zone);

}  // namespace dcage
