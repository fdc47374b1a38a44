#pragma once

#include <cstdint>
#include <optional>

#include "dcage/camera_validator.hpp"
#include "dcage/lidar_pipeline.hpp"
#include "dcage/protocol.hpp"
#include "dcage/vehicle_model.hpp"
#include "dcage/vehicle_state.hpp"

namespace dcage {

/// Everything the cage reads from the vehicle in one tick. Sensor
/// timestamps never exceed `clock_ms`.
struct SensorSnapshot {
  std::int64_t clock_ms{0};
  VehiclePose pose;
  std::optional<LidarScan> lidar;
  std::optional<CameraFrame> front_camera;
  std::optional<CameraFrame> back_camera;
  DoorState door_state{DoorState::Closed};
  std::optional<std::int64_t> door_timestamp_ms;  // absent until the door sensor reports
  MissionState mission_state{MissionState::Inactive};
  std::optional<protocol::MissionData> mission;
};

}  // namespace dcage
