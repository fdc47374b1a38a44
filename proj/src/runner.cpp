#include "dcage/runner.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "dcage/ccc_service.hpp"
#include "dcage/dc_runtime.hpp"
#include "dcage/errors.hpp"

namespace dcage {

using nlohmann::json;
using protocol::AckOutcome;

// ---- operator script ------------------------------------------------------

namespace {

[[noreturn]] void script_fail(const std::string& origin, const std::string& where, const std::string& msg) {
  throw ConfigError(origin + ": " + where + ": " + msg);
}

void only_keys(const json& j, std::initializer_list<std::string_view> keys, const std::string& origin,
               const std::string& where) {
  if (!j.is_object()) script_fail(origin, where, "expected an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) script_fail(origin, where + "." + k, "unknown key");
  }
}

}  // namespace

OperatorScript parse_operator_script(std::string_view text, const std::string& origin) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(origin + ": malformed JSON");
  only_keys(doc, {"vehicle_id", "steps"}, origin, "<root>");

  OperatorScript script;
  if (doc.contains("vehicle_id")) {
    if (!doc["vehicle_id"].is_string()) script_fail(origin, "vehicle_id", "expected a string");
    script.vehicle_id = doc["vehicle_id"].get<std::string>();
  }
  if (!doc.contains("steps")) return script;
  if (!doc["steps"].is_array()) script_fail(origin, "steps", "expected an array");

  std::optional<std::int64_t> last_time;
  for (std::size_t i = 0; i < doc["steps"].size(); ++i) {
    const json& js = doc["steps"][i];
    const std::string where = "steps[" + std::to_string(i) + "]";
    only_keys(js, {"trigger", "action", "expected_ack"}, origin, where);
    if (!js.contains("trigger") || !js.contains("action")) script_fail(origin, where, "needs trigger and action");

    OperatorStep step;
    const json& tr = js["trigger"];
    only_keys(tr, {"at_time_ms", "on_event", "to", "delay_ms"}, origin, where + ".trigger");
    if (tr.contains("at_time_ms") == tr.contains("on_event")) {
      script_fail(origin, where + ".trigger", "needs exactly one of at_time_ms and on_event");
    }
    if (tr.contains("at_time_ms")) {
      if (!tr["at_time_ms"].is_number_integer() || tr["at_time_ms"].get<std::int64_t>() < 0) {
        script_fail(origin, where + ".trigger.at_time_ms", "expected a non-negative integer");
      }
      step.at_time_ms = tr["at_time_ms"].get<std::int64_t>();
      if (last_time && *step.at_time_ms < *last_time) {
        script_fail(origin, where + ".trigger.at_time_ms", "timed triggers must be in non-decreasing order");
      }
      last_time = step.at_time_ms;
      if (tr.contains("to")) script_fail(origin, where + ".trigger.to", "only valid with on_event");
    } else {
      if (!tr["on_event"].is_string()) script_fail(origin, where + ".trigger.on_event", "expected an event kind");
      step.on_event = tr["on_event"].get<std::string>();
      if (tr.contains("to")) {
        if (!tr["to"].is_string()) script_fail(origin, where + ".trigger.to", "expected a string");
        step.event_to = tr["to"].get<std::string>();
      }
    }
    if (tr.contains("delay_ms")) {
      if (!tr["delay_ms"].is_number_integer() || tr["delay_ms"].get<std::int64_t>() < 0) {
        script_fail(origin, where + ".trigger.delay_ms", "expected a non-negative integer");
      }
      step.delay_ms = tr["delay_ms"].get<std::int64_t>();
    }
    try {
      step.action = protocol::command_from_json(js["action"]);
    } catch (const ProtocolError& e) {
      script_fail(origin, where + ".action", e.what());
    }
    if (js.contains("expected_ack")) {
      const auto o = js["expected_ack"].is_string() ? protocol::parse_ack_outcome(js["expected_ack"].get<std::string>())
                                                    : std::nullopt;
      if (!o) script_fail(origin, where + ".expected_ack", "expected accepted, rejected or timeout");
      step.expected_ack = o;
    }
    script.steps.push_back(std::move(step));
  }
  return script;
}

OperatorScript load_operator_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open operator script '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_operator_script(buf.str(), path.string());
}

// ---- geometry helper ------------------------------------------------------

double polygon_distance(const Polygon2d& a, const Polygon2d& b) {
  for (const auto& p : a) {
    if (polygon_contains(b, p)) return 0.0;
  }
  for (const auto& p : b) {
    if (polygon_contains(a, p)) return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = a.size() - 1; i < a.size(); j = i++) {
    for (std::size_t k = 0, l = b.size() - 1; k < b.size(); l = k++) {
      if (detail::proper_intersect(a[j], a[i], b[l], b[k])) return 0.0;
    }
  }
  for (const auto& p : a) best = std::min(best, point_polygon_distance(b, p));
  for (const auto& p : b) best = std::min(best, point_polygon_distance(a, p));
  return best;
}

// ---- report ---------------------------------------------------------------

bool RunReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* RunReport::check(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

json RunReport::to_json() const {
  auto transitions = [](const std::vector<Transition>& v) {
    json arr = json::array();
    for (const auto& t : v) arr.push_back({{"t_ms", t.t_ms}, {"from", t.from}, {"to", t.to}});
    return arr;
  };
  json j;
  j["scenario"] = scenario;
  j["vehicle_id"] = vehicle_id;
  j["seed"] = seed;
  j["sim_duration_ms"] = sim_duration_ms;
  j["ticks"] = ticks;
  j["final_mission_state"] = std::string(to_string(final_mission_state));
  j["final_driving_mode"] = std::string(to_string(final_mode));
  j["es_stop_clearance_m"] = es_stop_clearance_m ? json(*es_stop_clearance_m) : json(nullptr);
  j["es_stops"] = json::array();
  for (const auto& s : es_stops) j["es_stops"].push_back({{"t_ms", s.t_ms}, {"front_clearance_m", s.front_clearance_m}});
  j["min_clearance_m"] = json::object();
  for (const auto& [name, d] : min_clearance_m) j["min_clearance_m"][name] = d;
  j["mode_transitions"] = transitions(mode_transitions);
  j["mission_transitions"] = transitions(mission_transitions);
  j["deliveries"] = json::array();
  for (const auto& d : deliveries) {
    j["deliveries"].push_back({{"waypoint", d.waypoint},
                               {"arrived_ms", d.arrived_ms},
                               {"departed_ms", d.departed_ms ? json(*d.departed_ms) : json(nullptr)},
                               {"mode_at_arrival", std::string(to_string(d.mode_at_arrival))},
                               {"mode_at_departure", std::string(to_string(d.mode_at_departure))}});
  }
  j["script_steps"] = json::array();
  for (const auto& s : steps) {
    json js{{"index", s.index}, {"command", s.command}, {"ok", s.ok}};
    js["fired_ms"] = s.fired_ms ? json(*s.fired_ms) : json(nullptr);
    js["ack"] = s.ack ? json(std::string(to_string(s.ack->outcome))) : json(nullptr);
    js["ack_reason"] = s.ack ? json(s.ack->reason) : json(nullptr);
    js["expected_ack"] = s.expected ? json(std::string(to_string(*s.expected))) : json(nullptr);
    j["script_steps"].push_back(std::move(js));
  }
  j["checks"] = json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["pass"] = pass();
  return j;
}

// ---- run ------------------------------------------------------------------

namespace {

// Lossy duplex pipe between the vehicle and the CCC, carrying encoded frames.
class FaultyLink {
 public:
  FaultyLink(const FaultSchedule& faults, std::uint64_t seed) : faults_(faults), rng_(seed) {}

  bool pass(std::int64_t now) {
    const double p = faults_.link_drop_probability(now);
    if (p <= 0.0) return true;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) >= p;
  }

  std::deque<std::string> to_vehicle;

 private:
  const FaultSchedule& faults_;
  std::mt19937_64 rng_;
};

std::string command_label(const protocol::CommandBody& c) {
  std::string out(protocol::command_name(c));
  if (const auto* m = std::get_if<protocol::SetDrivingMode>(&c)) out += "(" + std::string(short_name(m->mode)) + ")";
  return out;
}

}  // namespace

RunReport run_scenario(const Scenario& scenario_in, const OperatorScript& script, const RunOptions& options) {
  Scenario sc = scenario_in;
  if (options.seed) sc.sim.seed = *options.seed;
  if (options.tick_ms) {
    if (*options.tick_ms < 1 || *options.tick_ms > 100) throw ConfigError("tick_ms must lie in [1, 100]");
    sc.sim.tick_ms = *options.tick_ms;
  }
  if (script.vehicle_id && *script.vehicle_id != sc.vehicle_id) {
    throw ConfigError("operator script targets vehicle '" + *script.vehicle_id + "' but the scenario runs '" +
                      sc.vehicle_id + "'");
  }

  RunReport rep;
  rep.scenario = sc.name;
  rep.vehicle_id = sc.vehicle_id;
  rep.seed = sc.sim.seed;

  Simulation sim(sc);
  DependabilityCage dc(DcConfig::from_scenario(sc));

  std::int64_t now = 0;
  auto log = options.log_path ? std::make_shared<EventLogWriter>(*options.log_path) : std::make_shared<EventLogWriter>();
  CccService ccc(CccConfig{}, [&now] { return now; }, log);
  FaultyLink link(sc.faults, sc.sim.seed ^ 0x9e3779b97f4a7c15ULL);

  const ConnectionId conn = ccc.open_connection([&](const protocol::WireMessage& m) {
    link.to_vehicle.push_back(protocol::encode(m));
    return true;
  });

  // What the log says, gathered as it is written.
  std::vector<EventLogEntry> seen;  // everything except telemetry
  std::vector<VehicleStateSummary> logged_summaries;
  struct Observed {
    std::string kind, to;
    std::int64_t t_ms;
  };
  std::vector<Observed> operator_events;
  ccc.subscribe([&](const EventLogEntry& e) {
    if (const auto* t = protocol::get_if<protocol::TelemetrySnapshot>(e.message)) {
      logged_summaries.push_back(t->summary);
      return;
    }
    if (const auto* ev = protocol::get_if<protocol::Event>(e.message)) {
      operator_events.push_back({ev->kind, ev->to, e.wall_time_ms});
      if (ev->kind == "ModeChanged") rep.mode_transitions.push_back({e.wall_time_ms, ev->from, ev->to});
      if (ev->kind == "MissionStateChanged") rep.mission_transitions.push_back({e.wall_time_ms, ev->from, ev->to});
      if (options.progress && ev->kind == "ModeChanged") {
        *options.progress << "[" << e.wall_time_ms << " ms] " << ev->from << " -> " << ev->to << "\n";
      }
    }
    seen.push_back(e);
  });

  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    rep.steps.push_back({i, command_label(script.steps[i].action), std::nullopt, std::nullopt,
                         script.steps[i].expected_ack, false});
  }
  std::size_t next_step = 0;
  std::size_t events_consumed = 0;
  std::optional<std::int64_t> step_due;
  bool mission_sent = !sc.mission.has_value();
  std::optional<protocol::Ack> mission_ack;

  for (const auto& o : sc.world.obstacles) rep.min_clearance_m[o.name] = std::numeric_limits<double>::infinity();

  const std::int64_t max_ms = static_cast<std::int64_t>(sc.sim.max_duration_s * 1000.0);
  const auto wall_start = std::chrono::steady_clock::now();
  std::optional<std::int64_t> finish_at;
  bool in_es_moving = false;

  ccc.ingest_frame(protocol::encode(dc.register_message(now)), conn);

  while (now < max_ms) {
    now = sim.now_ms();

    if (!mission_sent && now >= sc.mission->assign_at_ms) {
      mission_sent = true;
      ccc.dispatch_command(sc.vehicle_id, protocol::AssignMission{sc.mission->assignment},
                           [&](const protocol::Ack& a) { mission_ack = a; });
    }

    // Scripted operator: steps arm one after another.
    while (next_step < script.steps.size()) {
      const OperatorStep& st = script.steps[next_step];
      if (!step_due) {
        if (st.at_time_ms) {
          step_due = *st.at_time_ms;
        } else {
          for (; events_consumed < operator_events.size(); ++events_consumed) {
            const auto& ev = operator_events[events_consumed];
            if (ev.kind == *st.on_event && (!st.event_to || ev.to == *st.event_to)) {
              step_due = ev.t_ms + st.delay_ms;
              ++events_consumed;
              break;
            }
          }
        }
      }
      if (!step_due || now < *step_due) break;
      const std::size_t idx = next_step++;
      step_due.reset();
      rep.steps[idx].fired_ms = now;
      ccc.dispatch_command(sc.vehicle_id, st.action, [&rep, idx](const protocol::Ack& a) { rep.steps[idx].ack = a; });
    }
    // Events logged before a step armed still count for on_event steps that
    // follow, so they are only consumed by matching.

    while (!link.to_vehicle.empty()) {
      std::string body = std::move(link.to_vehicle.front());
      link.to_vehicle.pop_front();
      if (link.pass(now)) dc.handle_ccc_frame(body);
    }

    const SensorSnapshot snap = sim.sense();
    const TickResult r = dc.tick(snap);
    rep.dc_summaries.push_back(r.summary);
    sim.apply(r.actuation);
    ++rep.ticks;

    if (!sim.path().empty()) rep.cross_track_error.push_back(sim.path().cross_track({sim.pose().x, sim.pose().y}));
    const Polygon2d body = sim.footprint_world();
    const Point2d bumper = sim.front_bumper_world();
    double front_clear = std::numeric_limits<double>::infinity();
    for (const auto& o : sc.world.obstacles) {
      rep.min_clearance_m[o.name] = std::min(rep.min_clearance_m[o.name], polygon_distance(body, o.outline));
      front_clear = std::min(front_clear, point_polygon_distance(o.outline, bumper));
    }
    if (r.actuation.mode == DrivingMode::ES) {
      if (sim.pose().speed > 0.0) {
        in_es_moving = true;
      } else if (in_es_moving || rep.es_stops.empty() ||
                 (!rep.mode_transitions.empty() && rep.es_stops.back().t_ms < rep.mode_transitions.back().t_ms)) {
        in_es_moving = false;
        rep.es_stops.push_back({sim.now_ms(), front_clear});
      }
    } else {
      in_es_moving = false;
    }

    for (const auto& m : dc.drain_outbox()) {
      if (link.pass(now)) ccc.ingest_frame(protocol::encode(m), conn);
    }
    ccc.poll();

    const bool script_done = next_step >= script.steps.size() && ccc.pending_commands() == 0;
    const bool mission_done = sc.mission && sim.mission().state == MissionState::Completed;
    const bool mission_failed = mission_ack && mission_ack->outcome != AckOutcome::Accepted;
    if (!finish_at && script_done && (mission_done || mission_failed)) finish_at = sim.now_ms() + 1000;
    if (finish_at && sim.now_ms() >= *finish_at) break;

    if (options.realtime) {
      std::this_thread::sleep_until(wall_start + std::chrono::milliseconds(sim.now_ms()));
    }
    now = sim.now_ms();
  }
  log->flush();

  rep.sim_duration_ms = sim.now_ms();
  rep.final_mission_state = sim.mission().state;
  rep.final_mode = dc.mode();
  rep.deliveries = sim.deliveries();
  if (!rep.es_stops.empty()) rep.es_stop_clearance_m = rep.es_stops.front().front_clearance_m;

  if (options.log_path) {
    std::ifstream in(*options.log_path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    rep.log_text = buf.str();
  } else {
    rep.log_text = log->contents();
  }

  // ---- checks ----
  {
    Check c{"expected_acks", true, ""};
    for (auto& s : rep.steps) {
      s.ok = s.fired_ms && s.ack && (!s.expected || s.ack->outcome == *s.expected);
      if (!s.ok) {
        c.pass = false;
        std::ostringstream os;
        os << "step " << s.index << " (" << s.command << "): ";
        if (!s.fired_ms) {
          os << "never triggered";
        } else if (!s.ack) {
          os << "no acknowledgement";
        } else {
          os << "got " << to_string(s.ack->outcome) << (s.ack->reason.empty() ? "" : " (" + s.ack->reason + ")")
             << ", expected " << to_string(*s.expected);
        }
        c.detail += (c.detail.empty() ? "" : "; ") + os.str();
      }
    }
    rep.checks.push_back(std::move(c));
  }
  if (sc.mission) {
    Check c{"mission_completed", rep.final_mission_state == MissionState::Completed,
            "final mission state " + std::string(to_string(rep.final_mission_state))};
    rep.checks.push_back(std::move(c));
  }
  {
    Check c{"mission_lifecycle", true, ""};
    for (const auto& t : rep.mission_transitions) {
      const auto from = parse_mission_state(t.from);
      const auto to = parse_mission_state(t.to);
      if (!from || !to || !is_allowed_transition(*from, *to)) {
        c.pass = false;
        c.detail += t.from + " -> " + t.to + " at " + std::to_string(t.t_ms) + " ms; ";
      }
    }
    rep.checks.push_back(std::move(c));
  }
  {
    std::multiset<std::uint64_t> commands;
    std::multiset<std::uint64_t> acks;
    for (const auto& e : seen) {
      if (protocol::get_if<protocol::Command>(e.message)) commands.insert(e.message.seq);
      if (const auto* a = protocol::get_if<protocol::Ack>(e.message)) acks.insert(a->ref_seq);
    }
    Check c{"exactly_one_ack", commands == acks,
            std::to_string(commands.size()) + " commands, " + std::to_string(acks.size()) + " acks"};
    rep.checks.push_back(std::move(c));
  }
  {
    Check c{"event_completeness", true, ""};
    // Between consecutive logged summaries, each changed field must come with
    // exactly one event of the matching kind.
    std::optional<VehicleStateSummary> prev;
    std::map<std::string, int> kinds;
    std::size_t k = 0;
    auto read = [&](const std::string& text) {
      std::istringstream in(text);
      return read_log(in);
    };
    for (const auto& e : read(rep.log_text)) {
      if (e.direction != Direction::FromVehicle) continue;
      if (const auto* ev = protocol::get_if<protocol::Event>(e.message)) {
        ++kinds[ev->kind];
      } else if (const auto* t = protocol::get_if<protocol::TelemetrySnapshot>(e.message)) {
        const auto& s = t->summary;
        const VehicleStateSummary base = prev.value_or(VehicleStateSummary{s.vehicle_id});
        std::map<std::string, int> want;
        if (base.driving_mode != s.driving_mode) want["ModeChanged"] = 1;
        if (base.cage_state != s.cage_state) want["CageStateChanged"] = 1;
        if (base.mission_state != s.mission_state) want["MissionStateChanged"] = 1;
        if (base.door_state != s.door_state) want["DoorStateChanged"] = 1;
        if (base.sensor_data != s.sensor_data) want["SensorDataChanged"] = 1;
        if (want != kinds && c.pass) {
          c.pass = false;
          c.detail = "mismatch at summary seq " + std::to_string(s.seq);
        }
        kinds.clear();
        prev = s;
        ++k;
      }
    }
    if (c.pass) c.detail = std::to_string(k) + " summaries checked";
    rep.checks.push_back(std::move(c));
  }
  {
    Check c{"summary_seq_increasing", true, ""};
    for (std::size_t i = 1; i < logged_summaries.size(); ++i) {
      if (logged_summaries[i].seq <= logged_summaries[i - 1].seq) {
        c.pass = false;
        c.detail = "seq " + std::to_string(logged_summaries[i].seq) + " after " + std::to_string(logged_summaries[i - 1].seq);
        break;
      }
    }
    rep.checks.push_back(std::move(c));
  }
  {
    Check c{"no_collision", true, ""};
    for (const auto& [name, d] : rep.min_clearance_m) {
      if (!(d > 0.0)) {
        c.pass = false;
        c.detail += "contact with " + name + "; ";
      }
    }
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

}  // namespace dcage
