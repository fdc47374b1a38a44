#include "dcage/protocol.hpp"

#include <array>

#include "dcage/errors.hpp"

namespace dcage::protocol {

using nlohmann::json;

namespace {

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void fail(const std::string& what) { throw ProtocolError(what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object()) fail(std::string("expected object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

std::string get_string(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double get_number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::int64_t get_int(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_uint(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

template <typename T, typename Parse>
T get_enum(const json& j, const char* key, Parse parse) {
  const std::string s = get_string(j, key);
  auto v = parse(s);
  if (!v) fail(std::string("field '") + key + "' has unknown value '" + s + "'");
  return *v;
}

json points_to_json(const std::vector<Point2d>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(json::array({p.x(), p.y()}));
  return arr;
}

std::vector<Point2d> points_from_json(const json& j, const char* key) {
  const json& arr = field(j, key);
  if (!arr.is_array()) fail(std::string("field '") + key + "' must be an array");
  std::vector<Point2d> out;
  out.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      fail(std::string("field '") + key + "' must hold [x, y] pairs");
    }
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

json verdict_to_json(const ValidityVerdict& v) {
  json reasons = json::array();
  for (auto r : v.reasons) reasons.push_back(std::string(to_string(r)));
  return {{"validity", std::string(to_string(v.validity))}, {"reasons", reasons}};
}

ValidityVerdict verdict_from_json(const json& j) {
  const json& arr = field(j, "reasons");
  if (!arr.is_array()) fail("field 'reasons' must be an array");
  std::vector<FrameIssue> reasons;
  for (const auto& r : arr) {
    if (!r.is_string()) fail("camera reasons must be strings");
    auto parsed = parse_frame_issue(r.get<std::string>());
    if (!parsed) fail("unknown camera reason '" + r.get<std::string>() + "'");
    reasons.push_back(*parsed);
  }
  ValidityVerdict v = make_verdict(std::move(reasons));
  if (v.validity != get_enum<Validity>(j, "validity", parse_validity)) fail("camera validity contradicts reasons");
  return v;
}

json payload_to_json(const Payload& p) {
  return std::visit(
      Overloaded{
          [](const Register& r) -> json { return {{"software", r.software}, {"tick_ms", r.tick_ms}}; },
          [](const TelemetrySnapshot& t) -> json {
            json j{{"summary", summary_to_json(t.summary)},
                   {"pose",
                    {{"x", t.pose.x},
                     {"y", t.pose.y},
                     {"heading", t.pose.heading},
                     {"speed", t.pose.speed},
                     {"steering", t.pose.steering}}},
                   {"zone_mode", std::string(to_string(t.zone_mode))},
                   {"zone", points_to_json(t.zone)},
                   {"scan", points_to_json(t.scan)},
                   {"offending", points_to_json(t.offending)},
                   {"cameras", {{"front", verdict_to_json(t.front_camera)}, {"back", verdict_to_json(t.back_camera)}}},
                   {"cage_mode", std::string(to_string(t.cage_mode))},
                   {"speed_cap", t.speed_cap},
                   {"outbox_drops", t.outbox_drops}};
            if (t.mission) {
              j["mission"] = {{"mission_id", t.mission->mission_id},
                              {"waypoints", t.mission->waypoints},
                              {"current_target", t.mission->current_target}};
            } else {
              j["mission"] = nullptr;
            }
            return j;
          },
          [](const Event& e) -> json { return {{"kind", e.kind}, {"from", e.from}, {"to", e.to}}; },
          [](const Command& c) -> json { return command_to_json(c.body); },
          [](const Ack& a) -> json {
            return {{"ref_seq", a.ref_seq}, {"outcome", std::string(to_string(a.outcome))}, {"reason", a.reason}};
          },
          [](const Error& e) -> json {
            json j{{"reason", e.reason}};
            j["ref_seq"] = e.ref_seq ? json(*e.ref_seq) : json(nullptr);
            return j;
          },
      },
      p);
}

TelemetrySnapshot telemetry_from_json(const json& j) {
  TelemetrySnapshot t;
  t.summary = summary_from_json(field(j, "summary"));
  const json& pose = field(j, "pose");
  t.pose = {get_number(pose, "x"), get_number(pose, "y"), get_number(pose, "heading"), get_number(pose, "speed"),
            get_number(pose, "steering")};
  t.zone_mode = get_enum<DrivingMode>(j, "zone_mode", parse_driving_mode);
  t.zone = points_from_json(j, "zone");
  t.scan = points_from_json(j, "scan");
  if (t.scan.size() > kMaxTelemetryScanPoints) fail("telemetry scan exceeds the point budget");
  t.offending = points_from_json(j, "offending");
  const json& cams = field(j, "cameras");
  t.front_camera = verdict_from_json(field(cams, "front"));
  t.back_camera = verdict_from_json(field(cams, "back"));
  t.cage_mode = get_enum<CageMode>(j, "cage_mode", parse_cage_mode);
  t.speed_cap = get_number(j, "speed_cap");
  t.outbox_drops = get_uint(j, "outbox_drops");
  const json& m = field(j, "mission");
  if (!m.is_null()) {
    MissionData md;
    md.mission_id = get_string(m, "mission_id");
    const json& wps = field(m, "waypoints");
    if (!wps.is_array()) fail("mission waypoints must be an array");
    for (const auto& w : wps) {
      if (!w.is_string()) fail("mission waypoints must be strings");
      md.waypoints.push_back(w.get<std::string>());
    }
    md.current_target = get_int(m, "current_target");
    t.mission = std::move(md);
  }
  return t;
}

Payload payload_from_json(std::string_view type, const json& p) {
  if (type == "Register") return Register{get_string(p, "software"), get_int(p, "tick_ms")};
  if (type == "TelemetrySnapshot") return telemetry_from_json(p);
  if (type == "Event") return Event{get_string(p, "kind"), get_string(p, "from"), get_string(p, "to")};
  if (type == "Command") return Command{command_from_json(p)};
  if (type == "Ack") {
    return Ack{get_uint(p, "ref_seq"), get_enum<AckOutcome>(p, "outcome", parse_ack_outcome), get_string(p, "reason")};
  }
  if (type == "Error") {
    Error e;
    e.reason = get_string(p, "reason");
    const json& ref = field(p, "ref_seq");
    if (!ref.is_null()) e.ref_seq = get_uint(p, "ref_seq");
    return e;
  }
  fail("unknown message type '" + std::string(type) + "'");
}

}  // namespace

std::string_view command_name(const CommandBody& c) {
  static constexpr std::array<std::string_view, 5> kNames{"SetDrivingMode", "SetCageMode", "DoorCommand",
                                                          "AssignMission", "ManualControl"};
  return kNames[c.index()];
}

std::string_view to_string(AckOutcome o) {
  switch (o) {
    case AckOutcome::Accepted: return "accepted";
    case AckOutcome::Rejected: return "rejected";
    case AckOutcome::Timeout: return "timeout";
  }
  return "";
}

std::optional<AckOutcome> parse_ack_outcome(std::string_view s) {
  for (auto o : {AckOutcome::Accepted, AckOutcome::Rejected, AckOutcome::Timeout}) {
    if (s == to_string(o)) return o;
  }
  return std::nullopt;
}

std::string_view WireMessage::type() const {
  static constexpr std::array<std::string_view, 6> kTypes{"Register", "TelemetrySnapshot", "Event",
                                                          "Command",  "Ack",               "Error"};
  return kTypes[payload.index()];
}

json summary_to_json(const VehicleStateSummary& s) {
  return {{"vehicle_id", s.vehicle_id},
          {"sensor_data", std::string(to_string(s.sensor_data))},
          {"mission_state", std::string(to_string(s.mission_state))},
          {"door_state", std::string(to_string(s.door_state))},
          {"driving_mode", std::string(to_string(s.driving_mode))},
          {"cage_state", std::string(to_string(s.cage_state))},
          {"timestamp", s.timestamp_ms},
          {"seq", s.seq}};
}

VehicleStateSummary summary_from_json(const json& j) {
  VehicleStateSummary s;
  s.vehicle_id = get_string(j, "vehicle_id");
  s.sensor_data = get_enum<Validity>(j, "sensor_data", parse_validity);
  s.mission_state = get_enum<MissionState>(j, "mission_state", parse_mission_state);
  s.door_state = get_enum<DoorState>(j, "door_state", parse_door_state);
  s.driving_mode = get_enum<DrivingMode>(j, "driving_mode", parse_driving_mode);
  s.cage_state = get_enum<CageState>(j, "cage_state", parse_cage_state);
  s.timestamp_ms = get_int(j, "timestamp");
  s.seq = get_uint(j, "seq");
  return s;
}

json command_to_json(const CommandBody& c) {
  json j = std::visit(
      Overloaded{
          [](const SetDrivingMode& m) -> json { return {{"mode", std::string(to_string(m.mode))}}; },
          [](const SetCageMode& m) -> json { return {{"cage_mode", std::string(to_string(m.cage_mode))}}; },
          [](const DoorCommand& d) -> json { return {{"action", std::string(to_string(d.action))}}; },
          [](const AssignMission& a) -> json {
            return {{"mission_id", a.mission.mission_id}, {"waypoints", a.mission.waypoints}};
          },
          [](const ManualControl& m) -> json {
            return {{"target_speed", m.setpoint.target_speed}, {"steering", m.setpoint.steering}};
          },
      },
      c);
  j["command"] = std::string(command_name(c));
  return j;
}

CommandBody command_from_json(const json& j) {
  const std::string name = get_string(j, "command");
  if (name == "SetDrivingMode") return SetDrivingMode{get_enum<DrivingMode>(j, "mode", parse_driving_mode)};
  if (name == "SetCageMode") return SetCageMode{get_enum<CageMode>(j, "cage_mode", parse_cage_mode)};
  if (name == "DoorCommand") return DoorCommand{get_enum<DoorAction>(j, "action", parse_door_action)};
  if (name == "AssignMission") {
    AssignMission a;
    a.mission.mission_id = get_string(j, "mission_id");
    const json& wps = field(j, "waypoints");
    if (!wps.is_array() || wps.empty()) fail("AssignMission needs a non-empty waypoint list");
    for (const auto& w : wps) {
      if (!w.is_string()) fail("AssignMission waypoints must be strings");
      a.mission.waypoints.push_back(w.get<std::string>());
    }
    return a;
  }
  if (name == "ManualControl") return ManualControl{{get_number(j, "target_speed"), get_number(j, "steering")}};
  fail("unknown command '" + name + "'");
}

json to_json(const WireMessage& msg) {
  return {{"type", std::string(msg.type())},
          {"vehicle_id", msg.vehicle_id},
          {"seq", msg.seq},
          {"timestamp", msg.timestamp_ms},
          {"payload", payload_to_json(msg.payload)}};
}

WireMessage from_json(const json& j) {
  WireMessage m;
  const std::string type = get_string(j, "type");
  m.vehicle_id = get_string(j, "vehicle_id");
  m.seq = get_uint(j, "seq");
  m.timestamp_ms = get_int(j, "timestamp");
  m.payload = payload_from_json(type, field(j, "payload"));
  return m;
}

std::string encode(const WireMessage& msg) { return to_json(msg).dump(); }

WireMessage decode(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail("malformed JSON frame");
  return from_json(j);
}

std::string frame(const WireMessage& msg) {
  const std::string body = encode(msg);
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(body.size() + 4);
  out.push_back(static_cast<char>((n >> 24U) & 0xFFU));
  out.push_back(static_cast<char>((n >> 16U) & 0xFFU));
  out.push_back(static_cast<char>((n >> 8U) & 0xFFU));
  out.push_back(static_cast<char>(n & 0xFFU));
  out += body;
  return out;
}

void FrameReader::feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<std::string> FrameReader::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8U) | static_cast<std::uint8_t>(buffer_[static_cast<std::size_t>(i)]);
  if (n > kMaxFrameBytes) fail("frame exceeds maximum size");
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string body = buffer_.substr(4, n);
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  return body;
}

}  // namespace dcage::protocol
