#pragma once

// Vehicle-side co-simulation: kinematics, synthetic sensors, door, mission
// and the driving stub, advanced one tick per call to apply().

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dcage/mission.hpp"
#include "dcage/scenario.hpp"
#include "dcage/sensor_snapshot.hpp"

namespace dcage {

struct DeliveryRecord {
  std::string waypoint;
  std::int64_t arrived_ms{0};
  std::optional<std::int64_t> departed_ms;
  DrivingMode mode_at_arrival{DrivingMode::FAD};
  DrivingMode mode_at_departure{DrivingMode::FAD};
};

class Simulation {
 public:
  explicit Simulation(Scenario scenario);

  const Scenario& scenario() const { return sc_; }
  std::int64_t now_ms() const { return now_ms_; }
  double dt() const { return static_cast<double>(sc_.sim.tick_ms) / 1000.0; }

  /// Sensor readings at the current time. Each call produces a fresh scan
  /// and fresh camera frames.
  SensorSnapshot sense();

  /// Applies the cage's command for this tick and advances time by one tick.
  void apply(const ActuationCommand& cmd);

  /// Starts a mission from the current position. Returns the rejection
  /// reason when it cannot be started.
  std::optional<std::string> assign(const MissionAssignment& assignment);

  const VehiclePose& pose() const { return pose_; }
  const Mission& mission() const { return mission_; }
  DoorState door() const { return door_; }
  const std::vector<DeliveryRecord>& deliveries() const { return deliveries_; }
  const RoutePath& path() const { return path_.path; }

  Point2d front_bumper_world() const;
  Polygon2d footprint_world() const;

 private:
  Controls controls_for(const ActuationCommand& cmd);

  Scenario sc_;
  std::mt19937_64 rng_;
  std::int64_t now_ms_{0};
  VehiclePose pose_;
  DoorState door_{DoorState::Closed};
  Mission mission_;
  MissionPath path_;
  double progress_{0.0};
  std::optional<ManualSetpoint> manual_;
  std::uint64_t scan_seq_{0};
  std::uint64_t frame_seq_[2]{0, 0};
  std::optional<CameraFrame> last_frame_[2];
  std::vector<DeliveryRecord> deliveries_;
};

}  // namespace dcage
