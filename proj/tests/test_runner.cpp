#include <doctest.h>

#include <sstream>

#include "dcage/errors.hpp"
#include "dcage/runner.hpp"

using namespace dcage;
using namespace dcage::protocol;

namespace {

const Scenario& hamburg() {
  static const Scenario sc = load_scenario(DCAGE_SCENARIO_DIR "/hamburg_demo.json");
  return sc;
}

const RunReport& hamburg_run() {
  static const RunReport r =
      run_scenario(hamburg(), load_operator_script(DCAGE_SCENARIO_DIR "/operators/hamburg_es_to_lad.json"));
  return r;
}

}  // namespace

TEST_CASE("hamburg demo: stop, resume under LAD, deliver") {
  const RunReport& r = hamburg_run();
  CHECK(r.pass());
  CHECK(r.final_mission_state == MissionState::Completed);

  // The parked car stops the vehicle with 1 to 2 m to spare.
  REQUIRE(r.es_stop_clearance_m);
  CHECK(*r.es_stop_clearance_m >= 1.0);
  CHECK(*r.es_stop_clearance_m <= 2.0);
  CHECK(r.min_clearance_m.at("parked_car") > 0.0);

  // FAD -> ES -> LAD, and the mission was blocked in between.
  REQUIRE(r.mode_transitions.size() >= 2);
  CHECK(r.mode_transitions[0].from == "fully autonomous driving");
  CHECK(r.mode_transitions[0].to == "emergency stop");
  CHECK(r.mode_transitions[1].from == "emergency stop");
  CHECK(r.mode_transitions[1].to == "limited autonomous driving");
  bool blocked = false, resumed = false;
  for (const auto& t : r.mission_transitions) {
    if (t.to == "blocked") blocked = true;
    if (blocked && t.from == "blocked" && t.to == "active") resumed = true;
  }
  CHECK(blocked);
  CHECK(resumed);

  REQUIRE(r.steps.size() == 1);
  REQUIRE(r.steps[0].ack);
  CHECK(r.steps[0].ack->outcome == AckOutcome::Accepted);
  CHECK(r.steps[0].ok);

  REQUIRE(r.deliveries.size() == 3);
  CHECK(r.deliveries[2].waypoint == "H3");
  CHECK(r.deliveries[2].mode_at_arrival == DrivingMode::LAD);
}

TEST_CASE("report mode trace matches the logged events") {
  const RunReport& r = hamburg_run();
  std::istringstream in(r.log_text);
  std::vector<std::pair<std::string, std::string>> logged;
  for (const auto& e : read_log(in)) {
    if (const auto* ev = get_if<Event>(e.message); ev && ev->kind == "ModeChanged") logged.emplace_back(ev->from, ev->to);
  }
  std::vector<std::pair<std::string, std::string>> reported;
  for (const auto& t : r.mode_transitions) reported.emplace_back(t.from, t.to);
  CHECK(logged == reported);

  const auto j = r.to_json();
  CHECK(j["scenario"] == "hamburg_demo");
  CHECK(j["pass"] == true);
  CHECK(j["mode_transitions"].size() == r.mode_transitions.size());
}

TEST_CASE("same seed, same log") {
  const RunReport a = run_scenario(hamburg(), OperatorScript{});
  const RunReport b = run_scenario(hamburg(), OperatorScript{});
  CHECK(a.log_text == b.log_text);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("without an operator the mission stays blocked") {
  const RunReport r = run_scenario(hamburg(), OperatorScript{});
  CHECK(r.final_mode == DrivingMode::ES);
  CHECK(r.final_mission_state == MissionState::Blocked);
  CHECK_FALSE(r.pass());
  REQUIRE(r.check("mission_completed"));
  CHECK_FALSE(r.check("mission_completed")->pass);
  CHECK(r.check("no_collision")->pass);
}

TEST_CASE("a rejected FAD request fails the expectation") {
  const RunReport r =
      run_scenario(hamburg(), load_operator_script(DCAGE_SCENARIO_DIR "/operators/hamburg_bad_fad.json"));
  REQUIRE(r.steps.size() == 1);
  REQUIRE(r.steps[0].ack);
  CHECK(r.steps[0].ack->outcome == AckOutcome::Rejected);
  CHECK(r.steps[0].ack->reason == "requested mode zone occupied");
  CHECK_FALSE(r.steps[0].ok);
  CHECK_FALSE(r.pass());
}

TEST_CASE("empty lot: straight delivery without emergency stop") {
  const RunReport r = run_scenario(load_scenario(DCAGE_SCENARIO_DIR "/empty.json"), OperatorScript{});
  CHECK(r.pass());
  CHECK(r.final_mission_state == MissionState::Completed);
  CHECK(r.es_stops.empty());
  CHECK(r.mode_transitions.empty());
}

TEST_CASE("operator script parsing") {
  const auto s = parse_operator_script(R"({
    "vehicle_id": "PLUTO",
    "steps": [
      {"trigger": {"at_time_ms": 100}, "action": {"command": "SetCageMode", "cage_mode": "passive"}},
      {"trigger": {"on_event": "ModeChanged", "to": "emergency stop", "delay_ms": 500},
       "action": {"command": "SetDrivingMode", "mode": "LAD"}, "expected_ack": "accepted"}
    ]
  })");
  REQUIRE(s.steps.size() == 2);
  CHECK(s.vehicle_id == std::optional<std::string>("PLUTO"));
  CHECK(s.steps[0].at_time_ms == 100);
  CHECK_FALSE(s.steps[0].expected_ack);
  CHECK(s.steps[1].on_event == std::optional<std::string>("ModeChanged"));
  CHECK(s.steps[1].event_to == std::optional<std::string>("emergency stop"));
  CHECK(s.steps[1].delay_ms == 500);
  CHECK(s.steps[1].action == CommandBody{SetDrivingMode{DrivingMode::LAD}});

  CHECK_THROWS_AS(parse_operator_script("{"), ConfigError);
  CHECK_THROWS_AS(parse_operator_script(R"({"steps": [{"action": {"command": "SetDrivingMode", "mode": "LAD"}}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_operator_script(R"({"steps": [{"trigger": {"at_time_ms": 5, "on_event": "X"},
                   "action": {"command": "SetDrivingMode", "mode": "LAD"}}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_operator_script(R"({"steps": [{"trigger": {"at_time_ms": 5},
                   "action": {"command": "Teleport"}}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_operator_script(R"({"steps": [
                   {"trigger": {"at_time_ms": 500}, "action": {"command": "SetDrivingMode", "mode": "LAD"}},
                   {"trigger": {"at_time_ms": 100}, "action": {"command": "SetDrivingMode", "mode": "FAD"}}]})"),
                  ConfigError);
  CHECK_THROWS_WITH_AS(parse_operator_script(R"({"steps": [{"trigger": {"at_time_ms": 5},
                   "action": {"command": "SetDrivingMode", "mode": "LAD"}, "expected_ack": "maybe"}]})", "op.json"),
                       doctest::Contains("op.json"), ConfigError);

  OperatorScript other;
  other.vehicle_id = "MARS";
  CHECK_THROWS_AS(run_scenario(hamburg(), other), ConfigError);
}

TEST_CASE("polygon distance") {
  const Polygon2d unit{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Polygon2d right{{3, 0}, {4, 0}, {4, 1}, {3, 1}};
  const Polygon2d cross{{0.5, -1}, {0.6, -1}, {0.6, 2}, {0.5, 2}};
  CHECK(polygon_distance(unit, right) == doctest::Approx(2.0));
  CHECK(polygon_distance(unit, cross) == 0.0);
  const Polygon2d inner{{0.2, 0.2}, {0.4, 0.2}, {0.4, 0.4}};
  CHECK(polygon_distance(unit, inner) == 0.0);
}
