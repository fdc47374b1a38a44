#pragma once

// Value types exchanged between the vehicle side (simulator + cage) and the
// command centre.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcage/driving_mode.hpp"
#include "dcage/mode_control.hpp"

namespace dcage {

enum class MissionState { Inactive, Active, Blocked, Completed };

constexpr std::string_view to_string(MissionState s) {
  switch (s) {
    case MissionState::Inactive: return "inactive";
    case MissionState::Active: return "active";
    case MissionState::Blocked: return "blocked";
    case MissionState::Completed: return "completed";
  }
  return "";
}

constexpr std::optional<MissionState> parse_mission_state(std::string_view s) {
  for (auto m : {MissionState::Inactive, MissionState::Active, MissionState::Blocked, MissionState::Completed}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

/// Edges of the mission lifecycle: inactive -> active <-> blocked, active -> completed.
constexpr bool is_allowed_transition(MissionState from, MissionState to) {
  using enum MissionState;
  return (from == Inactive && to == Active) || (from == Active && to == Blocked) ||
         (from == Blocked && to == Active) || (from == Active && to == Completed);
}

enum class DoorState { Open, Closed, NoData };

constexpr std::string_view to_string(DoorState d) {
  switch (d) {
    case DoorState::Open: return "open";
    case DoorState::Closed: return "closed";
    case DoorState::NoData: return "no data";
  }
  return "";
}

constexpr std::optional<DoorState> parse_door_state(std::string_view s) {
  for (auto d : {DoorState::Open, DoorState::Closed, DoorState::NoData}) {
    if (s == to_string(d)) return d;
  }
  return std::nullopt;
}

enum class DoorAction { Open, Close };

constexpr std::string_view to_string(DoorAction a) { return a == DoorAction::Open ? "open" : "close"; }

constexpr std::optional<DoorAction> parse_door_action(std::string_view s) {
  if (s == "open") return DoorAction::Open;
  if (s == "close") return DoorAction::Close;
  return std::nullopt;
}

/// The five attributes shown for a vehicle in the command centre.
struct VehicleStateSummary {
  std::string vehicle_id;
  Validity sensor_data{Validity::Valid};
  MissionState mission_state{MissionState::Inactive};
  DoorState door_state{DoorState::Closed};
  DrivingMode driving_mode{DrivingMode::FAD};
  CageState cage_state{CageState::Free};
  std::int64_t timestamp_ms{0};
  std::uint64_t seq{0};

  bool operator==(const VehicleStateSummary&) const = default;
};

struct MissionAssignment {
  std::string mission_id;
  std::vector<std::string> waypoints;

  bool operator==(const MissionAssignment&) const = default;
};

/// Remote-driving setpoint; only honoured in RMD.
struct ManualSetpoint {
  double target_speed{0.0};
  double steering{0.0};

  bool operator==(const ManualSetpoint&) const = default;
};

/// What the cage hands to the driving stack each tick.
struct ActuationCommand {
  double speed_cap{0.0};
  Brake brake{Brake::None};
  bool steering_hold{false};
  DrivingMode mode{DrivingMode::FAD};
  std::optional<MissionAssignment> assign_mission;
  std::optional<DoorAction> door;
  std::optional<ManualSetpoint> manual;

  bool operator==(const ActuationCommand&) const = default;
};

}  // namespace dcage
