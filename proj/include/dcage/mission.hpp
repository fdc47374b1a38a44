#pragma once

// Mission lifecycle and the waypoint-following driving stub.

#include <optional>
#include <string>
#include <vector>

#include "dcage/geometry.hpp"
#include "dcage/vehicle_model.hpp"
#include "dcage/vehicle_state.hpp"
#include "dcage/world.hpp"

namespace dcage {

/// Arc-length parameterised polyline.
class RoutePath {
 public:
  RoutePath() = default;
  /// Consecutive duplicate points are dropped; throws ConfigError when fewer
  /// than two distinct points remain.
  explicit RoutePath(std::vector<Point2d> points);

  bool empty() const { return points_.empty(); }
  double length() const { return stations_.empty() ? 0.0 : stations_.back(); }
  const std::vector<Point2d>& points() const { return points_; }
  const std::vector<double>& stations() const { return stations_; }

  /// Point at arc length s; beyond either end the end segment is extended.
  Point2d at(double s) const;
  /// Unit tangent at arc length s.
  Point2d tangent(double s) const;
  /// Arc length of the closest point among stations within [lo, hi].
  double project(const Point2d& p, double lo, double hi) const;
  double project(const Point2d& p) const;
  /// Distance from p to the polyline.
  double distance(const Point2d& p) const;
  /// Like distance(), but past either end only the lateral offset counts.
  double cross_track(const Point2d& p) const;

 private:
  std::size_t segment_at(double s) const;

  std::vector<Point2d> points_;
  std::vector<double> stations_;
};

/// Path through the route from `from` to each waypoint in turn, plus the arc
/// length at which each waypoint sits. Route points between consecutive stops
/// are kept when the stop appears later on the route; otherwise the leg is a
/// straight line. Throws ConfigError for unknown waypoint names.
struct MissionPath {
  RoutePath path;
  std::vector<double> stop_stations;
};
MissionPath build_mission_path(const WorldModel& world, const Point2d& from, const std::vector<std::string>& waypoints);

enum class MissionPhase { Driving, Dwelling, Closing };

std::string_view to_string(MissionPhase p);

struct Mission {
  std::string id;
  std::vector<std::string> waypoints;
  MissionState state{MissionState::Inactive};
  std::size_t current_target{0};
  MissionPhase phase{MissionPhase::Driving};
  double dwell_elapsed{0.0};

  bool operator==(const Mission&) const = default;
};

struct MissionConfig {
  double dwell_s{3.0};
  double reach_tolerance{0.5};
  double stop_speed{0.01};

  void validate() const;
};

struct MissionStep {
  Mission mission;
  std::optional<DoorAction> door_request;
  bool arrived{false};                  // vehicle just stopped at the current target
  std::optional<std::string> delivered;  // door cycle at this waypoint finished
};

/// Starts `assignment`; only valid from inactive or completed. Throws
/// DomainError otherwise or when the waypoint list is empty.
Mission assign_mission(const Mission& current, const MissionAssignment& assignment);

/// One lifecycle step. Entering ES blocks an active mission and leaving ES
/// re-activates it; at each waypoint the vehicle stops, the door opens, the
/// dwell runs while the door reads open, the door closes, and the target
/// advances. The last waypoint completes the mission.
MissionStep mission_update(const Mission& mission, const WorldModel& world, const VehiclePose& pose,
                           DrivingMode mode, DoorState door, double dt, const MissionConfig& cfg = {});

struct AdsConfig {
  double lookahead{2.0};
  double comfort_decel{1.0};   // used to plan the approach to a stop
  double lateral_accel{1.0};   // curvature speed limit
  double speed_gain{2.0};      // 1/s
  double steering_gain{8.0};   // 1/s, steering-rate tracking
  double stop_radius{0.3};     // inside this distance to the stop, brake to zero

  void validate() const;
};

struct AdsOutput {
  Controls controls;
  double steering_target{0.0};
  double progress{0.0};   // arc length of the projected pose
  double remaining{0.0};  // arc length to the stop
};

/// Pure pursuit toward the point `lookahead` ahead of the projected pose,
/// speed planned to stop at `stop_station` and kept below caps.speed_cap.
/// `progress_hint` keeps the projection from jumping between legs that pass
/// close to each other.
AdsOutput ads_step(const RoutePath& path, double progress_hint, double stop_station, const VehiclePose& pose,
                   const ActuationCommand& caps, const VehicleDynamics& dyn = {},
                   const AdsConfig& cfg = {});

/// Raw pure-pursuit law: steering toward a vehicle-frame target point.
double pure_pursuit_steering(const Point2d& target_local, double wheelbase);

}  // namespace dcage
