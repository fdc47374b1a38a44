#pragma once

// DC <-> CCC wire messages. On the vehicle link each message is a UTF-8 JSON
// document preceded by a 4-byte big-endian length; the HTTP/WebSocket side
// carries the same JSON without the prefix.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dcage/camera_validator.hpp"
#include "dcage/geometry.hpp"
#include "dcage/vehicle_state.hpp"

namespace dcage::protocol {

struct Register {
  std::string software;
  std::int64_t tick_ms{50};

  bool operator==(const Register&) const = default;
};

struct PoseData {
  double x{0}, y{0}, heading{0}, speed{0}, steering{0};

  bool operator==(const PoseData&) const = default;
};

struct MissionData {
  std::string mission_id;
  std::vector<std::string> waypoints;
  std::int64_t current_target{0};

  bool operator==(const MissionData&) const = default;
};

struct TelemetrySnapshot {
  VehicleStateSummary summary;
  PoseData pose;
  DrivingMode zone_mode{DrivingMode::FAD};
  std::vector<Point2d> zone;  // vehicle frame
  std::vector<Point2d> scan;  // filtered, downsampled, vehicle frame
  std::vector<Point2d> offending;
  ValidityVerdict front_camera;
  ValidityVerdict back_camera;
  CageMode cage_mode{CageMode::Active};
  double speed_cap{0};
  std::optional<MissionData> mission;
  std::uint64_t outbox_drops{0};

  bool operator==(const TelemetrySnapshot&) const = default;
};

/// Maximum number of scan points carried in a telemetry snapshot.
inline constexpr std::size_t kMaxTelemetryScanPoints = 200;

struct Event {
  std::string kind;  // ModeChanged, CageStateChanged, MissionStateChanged, DoorStateChanged, SensorDataChanged
  std::string from;
  std::string to;

  bool operator==(const Event&) const = default;
};

struct SetDrivingMode {
  DrivingMode mode{DrivingMode::FAD};
  bool operator==(const SetDrivingMode&) const = default;
};
struct SetCageMode {
  CageMode cage_mode{CageMode::Active};
  bool operator==(const SetCageMode&) const = default;
};
struct DoorCommand {
  DoorAction action{DoorAction::Open};
  bool operator==(const DoorCommand&) const = default;
};
struct AssignMission {
  MissionAssignment mission;
  bool operator==(const AssignMission&) const = default;
};
struct ManualControl {
  ManualSetpoint setpoint;
  bool operator==(const ManualControl&) const = default;
};

using CommandBody = std::variant<SetDrivingMode, SetCageMode, DoorCommand, AssignMission, ManualControl>;

std::string_view command_name(const CommandBody& c);

struct Command {
  CommandBody body;
  bool operator==(const Command&) const = default;
};

enum class AckOutcome { Accepted, Rejected, Timeout };

std::string_view to_string(AckOutcome o);
std::optional<AckOutcome> parse_ack_outcome(std::string_view s);

struct Ack {
  std::uint64_t ref_seq{0};
  AckOutcome outcome{AckOutcome::Accepted};
  std::string reason;

  bool operator==(const Ack&) const = default;
};

/// Reply to a frame that could not be decoded or has an unknown type.
struct Error {
  std::optional<std::uint64_t> ref_seq;
  std::string reason;

  bool operator==(const Error&) const = default;
};

using Payload = std::variant<Register, TelemetrySnapshot, Event, Command, Ack, Error>;

struct WireMessage {
  std::string vehicle_id;
  std::uint64_t seq{0};
  std::int64_t timestamp_ms{0};
  Payload payload;

  std::string_view type() const;
  bool operator==(const WireMessage&) const = default;
};

template <typename T>
const T* get_if(const WireMessage& m) {
  return std::get_if<T>(&m.payload);
}

nlohmann::json to_json(const WireMessage& msg);
/// Throws ProtocolError on unknown type or missing/ill-typed fields.
WireMessage from_json(const nlohmann::json& j);

std::string encode(const WireMessage& msg);
WireMessage decode(std::string_view text);

nlohmann::json summary_to_json(const VehicleStateSummary& s);
VehicleStateSummary summary_from_json(const nlohmann::json& j);
nlohmann::json command_to_json(const CommandBody& c);
CommandBody command_from_json(const nlohmann::json& j);

/// Length-prefixed frame for the vehicle link.
std::string frame(const WireMessage& msg);

/// Incremental splitter for length-prefixed frames.
class FrameReader {
 public:
  static constexpr std::uint32_t kMaxFrameBytes = 16U << 20U;

  void feed(std::string_view bytes);
  /// Next complete frame body, if any. Throws ProtocolError on oversized frames.
  std::optional<std::string> next();

 private:
  std::string buffer_;
};

}  // namespace dcage::protocol
