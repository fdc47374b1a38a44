#pragma once

// Scenario files: one JSON document describing the track, the vehicle, the
// cage configuration, the mission and the injected faults.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dcage/camera_validator.hpp"
#include "dcage/lidar_pipeline.hpp"
#include "dcage/mission.hpp"
#include "dcage/mode_control.hpp"
#include "dcage/safe_zone.hpp"
#include "dcage/vehicle_model.hpp"
#include "dcage/world.hpp"

namespace dcage {

struct SimSettings {
  std::int64_t tick_ms{50};
  std::uint64_t seed{1};
  double max_duration_s{600.0};
};

struct ScheduledMission {
  MissionAssignment assignment;
  std::int64_t assign_at_ms{0};
};

struct Scenario {
  std::string name{"unnamed"};
  std::string vehicle_id{"PLUTO"};
  SimSettings sim;
  VehicleGeometry geometry;
  VehicleDynamics dynamics;
  ZoneParams fad_zone{ZoneParams::fad_defaults()};
  ZoneParams lad_zone{ZoneParams::lad_defaults()};
  ModeCaps caps;
  CageMode cage_mode{CageMode::Active};
  FilterConfig filters;
  CameraConfig cameras;
  LidarConfig lidar;
  WorldModel world;
  VehiclePose start_pose;
  std::optional<ScheduledMission> mission;
  MissionConfig mission_cfg;
  AdsConfig ads;
  FaultSchedule faults;

  /// Zone parameters governing `mode` (remote and in-place manual driving
  /// reuse the limited-autonomy zone).
  const ZoneParams& zone_params(DrivingMode mode) const;
};

/// Parses and validates a scenario document. `origin` prefixes error
/// messages. Throws ConfigError naming the offending key and its line.
Scenario parse_scenario(std::string_view text, const std::string& origin = "scenario");

/// Reads and parses a scenario file. Throws ConfigError when the file cannot
/// be read or is invalid.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace dcage
