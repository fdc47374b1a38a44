#include "dcage/mission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcage/errors.hpp"

namespace dcage {

RoutePath::RoutePath(std::vector<Point2d> points) {
  for (const auto& p : points) {
    if (points_.empty() || (p - points_.back()).norm() > 1e-9) points_.push_back(p);
  }
  if (points_.size() < 2) throw ConfigError("route path needs at least two distinct points");
  stations_.reserve(points_.size());
  stations_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    stations_.push_back(stations_.back() + (points_[i] - points_[i - 1]).norm());
  }
}

std::size_t RoutePath::segment_at(double s) const {
  auto it = std::upper_bound(stations_.begin(), stations_.end(), s);
  auto idx = static_cast<std::size_t>(std::distance(stations_.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, points_.size() - 2);
}

Point2d RoutePath::at(double s) const {
  const std::size_t i = segment_at(s);
  const Point2d d = points_[i + 1] - points_[i];
  return points_[i] + (s - stations_[i]) / d.norm() * d;
}

Point2d RoutePath::tangent(double s) const {
  const std::size_t i = segment_at(s);
  return (points_[i + 1] - points_[i]).normalized();
}

double RoutePath::project(const Point2d& p, double lo, double hi) const {
  double best_s = std::clamp(lo, 0.0, length());
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const double s0 = std::max(stations_[i], lo);
    const double s1 = std::min(stations_[i + 1], hi);
    if (s0 > s1) continue;
    const Point2d a = at(s0);
    const Point2d b = at(s1);
    const Point2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const double d = (a + t * ab - p).norm();
    if (d < best_d) {
      best_d = d;
      best_s = s0 + t * (s1 - s0);
    }
  }
  return best_s;
}

double RoutePath::project(const Point2d& p) const { return project(p, 0.0, length()); }

double RoutePath::distance(const Point2d& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    best = std::min(best, point_segment_distance(p, points_[i], points_[i + 1]));
  }
  return best;
}

double RoutePath::cross_track(const Point2d& p) const {
  const double s = project(p);
  if (s > 0.0 && s < length()) return distance(p);
  const Point2d t = tangent(s);
  const Point2d d = p - at(s);
  return std::abs(t.x() * d.y() - t.y() * d.x());
}

MissionPath build_mission_path(const WorldModel& world, const Point2d& from, const std::vector<std::string>& waypoints) {
  std::vector<Point2d> pts{from};
  std::vector<std::size_t> stop_index;
  std::optional<std::size_t> cursor;

  for (const auto& name : waypoints) {
    const Point2d target = world.point(name);
    const std::size_t search_from = cursor ? *cursor + 1 : 0;
    std::optional<std::size_t> k;
    for (std::size_t i = search_from; i < world.route.size(); ++i) {
      if (world.route[i] == name) {
        k = i;
        break;
      }
    }
    if (k) {
      std::size_t j = search_from;
      if (!cursor) {
        // Join the route at the route point nearest to the start.
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i <= *k; ++i) {
          const double d = (world.point(world.route[i]) - from).norm();
          if (d < best) {
            best = d;
            j = i;
          }
        }
      }
      for (std::size_t i = j; i < *k; ++i) {
        const Point2d q = world.point(world.route[i]);
        if ((q - pts.back()).norm() > 0.5) pts.push_back(q);
      }
      cursor = k;
    }
    pts.push_back(target);
    stop_index.push_back(pts.size() - 1);
  }

  // Repeated points add no length, so these stations match the deduplicated path.
  std::vector<double> raw_stations{0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) raw_stations.push_back(raw_stations.back() + (pts[i] - pts[i - 1]).norm());

  MissionPath out;
  if (raw_stations.back() < 1e-9) {
    // Every stop is the start position: a tiny stub keeps the path well formed.
    pts.push_back(from + Point2d{1e-3, 0.0});
  }
  out.path = RoutePath(pts);
  for (std::size_t idx : stop_index) out.stop_stations.push_back(raw_stations[idx]);
  return out;
}

std::string_view to_string(MissionPhase p) {
  switch (p) {
    case MissionPhase::Driving: return "driving";
    case MissionPhase::Dwelling: return "dwelling";
    case MissionPhase::Closing: return "closing";
  }
  return "";
}

void MissionConfig::validate() const {
  if (!(dwell_s >= 0.0)) throw ConfigError("dwell_s must be non-negative");
  if (!(reach_tolerance > 0.0)) throw ConfigError("reach_tolerance must be strictly positive");
  if (!(stop_speed > 0.0)) throw ConfigError("stop_speed must be strictly positive");
}

Mission assign_mission(const Mission& current, const MissionAssignment& assignment) {
  if (current.state != MissionState::Inactive && current.state != MissionState::Completed) {
    throw DomainError("a mission is already in progress");
  }
  if (assignment.waypoints.empty()) throw DomainError("mission has no waypoints");
  Mission m;
  m.id = assignment.mission_id;
  m.waypoints = assignment.waypoints;
  m.state = MissionState::Active;
  return m;
}

MissionStep mission_update(const Mission& mission, const WorldModel& world, const VehiclePose& pose,
                           DrivingMode mode, DoorState door, double dt, const MissionConfig& cfg) {
  MissionStep out{mission, std::nullopt, false, std::nullopt};
  Mission& m = out.mission;

  if (m.state == MissionState::Active && mode == DrivingMode::ES) {
    m.state = MissionState::Blocked;
    return out;
  }
  if (m.state == MissionState::Blocked) {
    if (mode == DrivingMode::ES) return out;
    m.state = MissionState::Active;
  }
  if (m.state != MissionState::Active || m.current_target >= m.waypoints.size()) return out;

  switch (m.phase) {
    case MissionPhase::Driving: {
      const Point2d target = world.point(m.waypoints[m.current_target]);
      const double d = (Point2d{pose.x, pose.y} - target).norm();
      if (d <= cfg.reach_tolerance && pose.speed <= cfg.stop_speed) {
        m.phase = MissionPhase::Dwelling;
        m.dwell_elapsed = 0.0;
        out.arrived = true;
        out.door_request = DoorAction::Open;
      }
      break;
    }
    case MissionPhase::Dwelling:
      if (door == DoorState::Open) m.dwell_elapsed += dt;
      if (m.dwell_elapsed >= cfg.dwell_s - 1e-9) {
        m.phase = MissionPhase::Closing;
        out.door_request = DoorAction::Close;
      } else if (door == DoorState::Closed) {
        out.door_request = DoorAction::Open;
      }
      break;
    case MissionPhase::Closing:
      if (door == DoorState::Closed) {
        out.delivered = m.waypoints[m.current_target];
        ++m.current_target;
        m.phase = MissionPhase::Driving;
        m.dwell_elapsed = 0.0;
        if (m.current_target >= m.waypoints.size()) m.state = MissionState::Completed;
      } else {
        out.door_request = DoorAction::Close;
      }
      break;
  }
  return out;
}

void AdsConfig::validate() const {
  if (!(lookahead > 0.0)) throw ConfigError("ads lookahead must be strictly positive");
  if (!(comfort_decel > 0.0)) throw ConfigError("ads comfort_decel must be strictly positive");
  if (!(lateral_accel > 0.0)) throw ConfigError("ads lateral_accel must be strictly positive");
  if (!(speed_gain > 0.0) || !(steering_gain > 0.0)) throw ConfigError("ads gains must be strictly positive");
  if (!(stop_radius >= 0.0)) throw ConfigError("ads stop_radius must be non-negative");
}

double pure_pursuit_steering(const Point2d& target_local, double wheelbase) {
  const double ld2 = target_local.squaredNorm();
  if (ld2 < 1e-12) return 0.0;
  // Curvature of the arc through the origin and the target, tangent to x.
  const double kappa = 2.0 * target_local.y() / ld2;
  return std::atan(kappa * wheelbase);
}

AdsOutput ads_step(const RoutePath& path, double progress_hint, double stop_station, const VehiclePose& pose,
                   const ActuationCommand& caps, const VehicleDynamics& dyn, const AdsConfig& cfg) {
  AdsOutput out;
  const Point2d pos{pose.x, pose.y};
  out.progress = path.project(pos, progress_hint - 1.0, progress_hint + cfg.lookahead + 3.0);
  out.remaining = stop_station - out.progress;

  const Point2d look_local = to_local(path.at(out.progress + cfg.lookahead), pos, pose.heading);
  out.steering_target = std::clamp(pure_pursuit_steering(look_local, dyn.wheelbase), -dyn.max_steering,
                                   dyn.max_steering);
  out.controls.steering_rate = std::clamp(cfg.steering_gain * (out.steering_target - pose.steering),
                                          -dyn.max_steering_rate, dyn.max_steering_rate);

  double v_target = std::max(0.0, caps.speed_cap);
  v_target = std::min(v_target, std::sqrt(2.0 * cfg.comfort_decel * std::max(out.remaining, 0.0)));
  const double kappa = std::abs(std::tan(out.steering_target)) / dyn.wheelbase;
  if (kappa > 1e-9) v_target = std::min(v_target, std::sqrt(cfg.lateral_accel / kappa));

  if (out.remaining <= cfg.stop_radius) {
    out.controls.accel = -dyn.decel_max;
  } else {
    out.controls.accel = std::clamp(cfg.speed_gain * (v_target - pose.speed), -dyn.decel_max, dyn.max_accel);
  }
  return out;
}

}  // namespace dcage
