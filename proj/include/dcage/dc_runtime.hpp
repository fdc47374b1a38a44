#pragma once

// Onboard cage loop: zones, monitors, mode control, actuation, state summary
// and the CCC message exchange.

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dcage/camera_validator.hpp"
#include "dcage/lidar_pipeline.hpp"
#include "dcage/mode_control.hpp"
#include "dcage/protocol.hpp"
#include "dcage/safe_zone.hpp"
#include "dcage/scenario.hpp"
#include "dcage/sensor_snapshot.hpp"

namespace dcage {

struct DcConfig {
  std::string vehicle_id{"PLUTO"};
  VehicleGeometry geometry;
  ZoneParams fad_zone{ZoneParams::fad_defaults()};
  ZoneParams lad_zone{ZoneParams::lad_defaults()};
  ModeCaps caps;
  FilterConfig filters;
  CameraConfig cameras;
  CageMode initial_cage_mode{CageMode::Active};
  std::int64_t tick_ms{50};
  std::int64_t lidar_max_age_ms{500};
  std::int64_t door_max_age_ms{2000};
  std::size_t outbox_capacity{4096};
  double stationary_speed{1e-3};
  // When set, missions naming other points are rejected.
  std::optional<std::set<std::string>> known_points;

  static DcConfig from_scenario(const Scenario& sc);
  const ZoneParams& zone_params(DrivingMode mode) const;
  void validate() const;
};

namespace ack_reasons {
inline constexpr const char* kSuperseded = "superseded by a later mode request";
inline constexpr const char* kNotStationary = "vehicle not stationary";
inline constexpr const char* kMissionInProgress = "mission already in progress";
inline constexpr const char* kEmptyMission = "mission has no waypoints";
inline constexpr const char* kManualNeedsRmd = "manual control requires remote manual driving";
inline constexpr const char* kBadSetpoint = "manual setpoint out of range";
}  // namespace ack_reasons

struct PendingCommand {
  std::uint64_t ref_seq{0};
  protocol::CommandBody body;
};

struct TickResult {
  ActuationCommand actuation;
  VehicleStateSummary summary;
  std::vector<protocol::Event> events;
  std::vector<protocol::Ack> acks;
  ModeDecision decision;
  ZonePolygon zone;
  LidarVerdict verdict;
  std::optional<LidarVerdict> requested_verdict;
  ValidityVerdict front_camera;
  ValidityVerdict back_camera;
  protocol::TelemetrySnapshot telemetry;
};

class DependabilityCage {
 public:
  explicit DependabilityCage(DcConfig cfg);

  const DcConfig& config() const { return cfg_; }

  /// One control cycle over `snap` and every command queued so far.
  TickResult tick(const SensorSnapshot& snap);

  /// Summary of the latest tick (the boot state before the first tick).
  VehicleStateSummary build_summary() const;

  /// Safe to call from a receive thread. Commands are queued for the next
  /// tick; any other message type gets an Error reply.
  void handle_ccc_message(const protocol::WireMessage& msg);
  /// Decodes one frame body. Undecodable commands are rejected with an Ack
  /// when their seq can be recovered, anything else gets an Error reply.
  void handle_ccc_frame(std::string_view body);

  void enqueue(PendingCommand cmd);

  /// Messages waiting for the CCC, oldest first. Safe from any thread.
  std::vector<protocol::WireMessage> drain_outbox();
  std::uint64_t outbox_drops() const;

  protocol::WireMessage register_message(std::int64_t now_ms, const std::string& software = "dcage");

  DrivingMode mode() const { return mode_; }
  CageMode cage_mode() const { return cage_mode_; }

 private:
  struct CameraTrack {
    std::deque<CameraFrame> history;
    ValidityVerdict last;
  };

  ValidityVerdict check_camera(CameraTrack& track, const std::optional<CameraFrame>& frame, std::int64_t now);
  ZonePolygon zone_for(DrivingMode mode, double speed, double steering) const;
  void push_out(protocol::Payload payload, std::int64_t now);
  void push_locked(protocol::Payload payload, std::int64_t now);  // out_mu_ held

  DcConfig cfg_;
  DrivingMode mode_{DrivingMode::FAD};
  CageMode cage_mode_;
  CageState last_cage_state_{CageState::Free};
  CameraTrack front_;
  CameraTrack back_;
  VehicleStateSummary summary_;
  std::uint64_t summary_seq_{0};

  mutable std::mutex queue_mu_;
  std::vector<PendingCommand> queue_;

  mutable std::mutex out_mu_;
  std::deque<protocol::WireMessage> outbox_;
  std::uint64_t out_seq_{0};
  std::uint64_t drops_{0};
  std::int64_t last_clock_ms_{0};
};

}  // namespace dcage
