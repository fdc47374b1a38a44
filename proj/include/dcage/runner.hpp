#pragma once

// Headless co-simulation: vehicle simulator, cage and an in-process CCC on
// one simulated clock, with a scripted operator standing in for the human.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dcage/event_log.hpp"
#include "dcage/protocol.hpp"
#include "dcage/scenario.hpp"
#include "dcage/simulation.hpp"

namespace dcage {

struct OperatorStep {
  std::optional<std::int64_t> at_time_ms;
  std::optional<std::string> on_event;  // Event kind
  std::optional<std::string> event_to;  // optional match on Event.to
  std::int64_t delay_ms{0};
  protocol::CommandBody action;
  std::optional<protocol::AckOutcome> expected_ack;
};

struct OperatorScript {
  std::optional<std::string> vehicle_id;
  std::vector<OperatorStep> steps;
};

/// Throws ConfigError naming the offending step and key.
OperatorScript parse_operator_script(std::string_view text, const std::string& origin = "script");
OperatorScript load_operator_script(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  bool realtime{false};
  std::optional<std::filesystem::path> log_path;
  std::optional<std::int64_t> tick_ms;
  std::ostream* progress{nullptr};  // one line per mode change when set
};

struct Transition {
  std::int64_t t_ms{0};
  std::string from;
  std::string to;
};

struct StepRecord {
  std::size_t index{0};
  std::string command;
  std::optional<std::int64_t> fired_ms;
  std::optional<protocol::Ack> ack;
  std::optional<protocol::AckOutcome> expected;
  bool ok{false};
};

struct EsStop {
  std::int64_t t_ms{0};
  double front_clearance_m{0.0};
};

struct Check {
  std::string name;
  bool pass{false};
  std::string detail;
};

struct RunReport {
  std::string scenario;
  std::string vehicle_id;
  std::uint64_t seed{0};
  std::int64_t sim_duration_ms{0};
  std::uint64_t ticks{0};
  MissionState final_mission_state{MissionState::Inactive};
  DrivingMode final_mode{DrivingMode::FAD};
  std::optional<double> es_stop_clearance_m;
  std::vector<EsStop> es_stops;
  std::map<std::string, double> min_clearance_m;  // footprint to each obstacle over the run
  std::vector<Transition> mode_transitions;
  std::vector<Transition> mission_transitions;
  std::vector<DeliveryRecord> deliveries;
  std::vector<StepRecord> steps;
  std::vector<Check> checks;

  // Not serialized: raw material for tests.
  std::vector<VehicleStateSummary> dc_summaries;
  std::string log_text;
  std::vector<double> cross_track_error;  // per tick, distance to the mission path

  bool pass() const;
  const Check* check(std::string_view name) const;
  nlohmann::json to_json() const;
};

/// Runs until the mission completes (plus a short settle), or the scenario's
/// max duration. Script and scheduled mission commands go through the CCC.
RunReport run_scenario(const Scenario& scenario, const OperatorScript& script, const RunOptions& options = {});

/// Minimum distance between two simple polygons; 0 when they overlap.
double polygon_distance(const Polygon2d& a, const Polygon2d& b);

}  // namespace dcage
