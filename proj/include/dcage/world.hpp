#pragma once

// Static test-track model and the synthetic sensors that observe it.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dcage/camera_validator.hpp"
#include "dcage/geometry.hpp"
#include "dcage/lidar_pipeline.hpp"
#include "dcage/vehicle_model.hpp"

namespace dcage {

struct Obstacle {
  std::string name;
  Polygon2d outline;  // world frame, simple
  double height{1.5};
};

struct WorldModel {
  std::vector<Obstacle> obstacles;
  std::map<std::string, Point2d> delivery_points;  // named world-frame positions
  std::vector<std::string> route;                  // ordered names the vehicle drives through

  /// Throws ConfigError for non-simple outlines or unknown route names.
  void validate() const;
  Point2d point(const std::string& name) const;
};

struct LidarConfig {
  int n_beams{360};
  double fov{3.14159265358979323846};  // rad, centered on the vehicle x-axis
  double max_range{30.0};
  double mount_x{2.5};  // sensor position in the vehicle frame
  double mount_y{0.0};
  double ground_range{4.0};
  double ground_noise{0.02};
};

/// Half-open time window [from_ms, to_ms).
struct TimeWindow {
  std::int64_t from_ms{0};
  std::int64_t to_ms{0};
  bool contains(std::int64_t t) const { return t >= from_ms && t < to_ms; }
};

struct GhostBurst {
  TimeWindow window;
  int count{1};
  // Vehicle-frame box the ghosts are drawn from.
  double x_min{0}, x_max{5}, y_min{-1}, y_max{1};
  double z{0.5};
  double min_separation{1.0};
};

struct CameraFreeze {
  CameraId camera{CameraId::Front};
  TimeWindow window;
};

struct LinkFault {
  TimeWindow window;
  double drop_probability{1.0};
};

struct FaultSchedule {
  std::vector<GhostBurst> ghost_points;
  std::vector<CameraFreeze> camera_freeze;
  std::vector<LinkFault> link_faults;

  void validate() const;
  bool camera_frozen(CameraId id, std::int64_t t) const;
  /// Drop probability in force at t (0 when no fault is active).
  double link_drop_probability(std::int64_t t) const;
};

/// One forward scan. Obstacle hits are reported at z = 0.3, 0.6, 0.9 m (up to
/// the obstacle height), every beam adds a ground return near z = 0, and any
/// active ghost burst appends its isolated points.
LidarScan raycast_lidar(const WorldModel& world, const VehiclePose& pose, const LidarConfig& cfg,
                        const FaultSchedule& faults, std::int64_t t_ms, std::mt19937_64& rng);

/// Nearest obstacle distance along a single world-frame ray, if any within max_range.
std::optional<double> cast_ray(const WorldModel& world, const Point2d& origin, const Point2d& dir, double max_range);

/// Synthetic grayscale frame whose content changes with `seq`.
CameraFrame synthesize_frame(CameraId id, std::uint64_t seq, std::int64_t t_ms, int width = 32, int height = 24);

}  // namespace dcage
