#include "dcage/dc_runtime.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "dcage/errors.hpp"

namespace dcage {

using protocol::AckOutcome;

DcConfig DcConfig::from_scenario(const Scenario& sc) {
  DcConfig c;
  c.vehicle_id = sc.vehicle_id;
  c.geometry = sc.geometry;
  c.fad_zone = sc.fad_zone;
  c.lad_zone = sc.lad_zone;
  c.caps = sc.caps;
  c.filters = sc.filters;
  c.cameras = sc.cameras;
  c.initial_cage_mode = sc.cage_mode;
  c.tick_ms = sc.sim.tick_ms;
  std::set<std::string> names;
  for (const auto& [name, _] : sc.world.delivery_points) names.insert(name);
  c.known_points = std::move(names);
  return c;
}

const ZoneParams& DcConfig::zone_params(DrivingMode mode) const {
  return mode == DrivingMode::FAD || mode == DrivingMode::ES ? fad_zone : lad_zone;
}

void DcConfig::validate() const {
  if (vehicle_id.empty()) throw ConfigError("vehicle_id must not be empty");
  geometry.validate();
  fad_zone.validate();
  lad_zone.validate();
  caps.validate();
  filters.validate();
  cameras.validate();
  if (lidar_max_age_ms <= 0) throw ConfigError("lidar_max_age_ms must be strictly positive");
  if (door_max_age_ms <= 0) throw ConfigError("door_max_age_ms must be strictly positive");
  if (tick_ms <= 0) throw ConfigError("tick_ms must be strictly positive");
  if (outbox_capacity == 0) throw ConfigError("outbox_capacity must be at least 1");
}

DependabilityCage::DependabilityCage(DcConfig cfg) : cfg_(std::move(cfg)), cage_mode_(cfg_.initial_cage_mode) {
  cfg_.validate();
  summary_.vehicle_id = cfg_.vehicle_id;
}

VehicleStateSummary DependabilityCage::build_summary() const { return summary_; }

ZonePolygon DependabilityCage::zone_for(DrivingMode mode, double speed, double steering) const {
  return compute_safe_zone(speed, steering, cfg_.geometry, cfg_.zone_params(mode), mode);
}

ValidityVerdict DependabilityCage::check_camera(CameraTrack& track, const std::optional<CameraFrame>& frame,
                                                std::int64_t now) {
  if (!frame) {
    track.last = make_verdict({FrameIssue::Stale});
    return track.last;
  }
  // A frame seen on an earlier tick is judged against the history before it.
  const bool repeat = !track.history.empty() && track.history.back().seq == frame->seq;
  std::vector<CameraFrame> earlier(track.history.begin(), track.history.end() - (repeat ? 1 : 0));
  try {
    track.last = validate_frame(*frame, earlier, now, cfg_.cameras);
  } catch (const InputError&) {
    track.last = ValidityVerdict{Validity::Invalid, {}};
  }
  if (!repeat) {
    track.history.push_back(*frame);
    while (track.history.size() > cfg_.cameras.frozen_repeat_count) track.history.pop_front();
  }
  return track.last;
}

TickResult DependabilityCage::tick(const SensorSnapshot& snap) {
  TickResult r;
  const std::int64_t now = snap.clock_ms;
  const double speed = std::max(0.0, snap.pose.speed);
  const double steering = snap.pose.steering;

  std::vector<PendingCommand> cmds;
  {
    std::lock_guard lock(queue_mu_);
    cmds.swap(queue_);
  }

  // Commands other than mode requests take effect right away; of several
  // mode requests only the last one is evaluated.
  std::optional<PendingCommand> mode_request;
  auto ack = [&](std::uint64_t ref, bool ok, std::string reason = {}) {
    r.acks.push_back({ref, ok ? AckOutcome::Accepted : AckOutcome::Rejected, ok ? std::string{} : std::move(reason)});
  };
  bool mission_assigned = false;
  for (auto& c : cmds) {
    std::visit(
        [&](const auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, protocol::SetDrivingMode>) {
            if (mode_request) ack(mode_request->ref_seq, false, ack_reasons::kSuperseded);
            mode_request = c;
          } else if constexpr (std::is_same_v<T, protocol::SetCageMode>) {
            cage_mode_ = body.cage_mode;
            ack(c.ref_seq, true);
          } else if constexpr (std::is_same_v<T, protocol::DoorCommand>) {
            if (speed > cfg_.stationary_speed) {
              ack(c.ref_seq, false, ack_reasons::kNotStationary);
            } else {
              r.actuation.door = body.action;
              ack(c.ref_seq, true);
            }
          } else if constexpr (std::is_same_v<T, protocol::AssignMission>) {
            const bool idle =
                snap.mission_state == MissionState::Inactive || snap.mission_state == MissionState::Completed;
            if (!idle || mission_assigned) {
              ack(c.ref_seq, false, ack_reasons::kMissionInProgress);
            } else if (body.mission.waypoints.empty()) {
              ack(c.ref_seq, false, ack_reasons::kEmptyMission);
            } else {
              std::string unknown;
              if (cfg_.known_points) {
                for (const auto& w : body.mission.waypoints) {
                  if (!cfg_.known_points->contains(w)) {
                    unknown = w;
                    break;
                  }
                }
              }
              if (!unknown.empty()) {
                ack(c.ref_seq, false, "unknown waypoint '" + unknown + "'");
              } else {
                r.actuation.assign_mission = body.mission;
                mission_assigned = true;
                ack(c.ref_seq, true);
              }
            }
          } else if constexpr (std::is_same_v<T, protocol::ManualControl>) {
            const auto& sp = body.setpoint;
            if (mode_ != DrivingMode::RMD) {
              ack(c.ref_seq, false, ack_reasons::kManualNeedsRmd);
            } else if (!std::isfinite(sp.target_speed) || !std::isfinite(sp.steering) || sp.target_speed < 0.0) {
              ack(c.ref_seq, false, ack_reasons::kBadSetpoint);
            } else {
              r.actuation.manual = sp;
              ack(c.ref_seq, true);
            }
          }
        },
        c.body);
  }

  // Current-mode zone. In ES the vehicle is held, so the zone shown is the
  // one nominal driving would need to resume.
  r.zone = mode_ == DrivingMode::ES ? zone_for(DrivingMode::ES, cfg_.caps.fad, steering)
                                    : zone_for(mode_, speed, steering);

  const bool lidar_fresh = snap.lidar && snap.lidar->timestamp_ms <= now && now - snap.lidar->timestamp_ms <= cfg_.lidar_max_age_ms;
  if (lidar_fresh) {
    r.verdict = evaluate(*snap.lidar, r.zone, cfg_.filters, cfg_.geometry);
    last_cage_state_ = r.verdict.cage_state;
  } else {
    r.verdict.cage_state = last_cage_state_;
  }

  r.front_camera = check_camera(front_, snap.front_camera, now);
  r.back_camera = check_camera(back_, snap.back_camera, now);
  const Validity sensor_validity =
      r.front_camera.validity == Validity::Valid && lidar_fresh ? Validity::Valid : Validity::Invalid;

  ModeInputs in;
  in.current_mode = mode_;
  in.cage_state_current = r.verdict.cage_state;
  in.camera_validity = sensor_validity;
  in.cage_mode = cage_mode_;
  in.speed = speed;
  in.steering_angle = steering;
  if (mode_request) {
    const DrivingMode want = std::get<protocol::SetDrivingMode>(mode_request->body).mode;
    in.operator_request = want;
    const ZonePolygon zone = zone_for(want, cfg_.caps.cap(want == DrivingMode::ES ? DrivingMode::FAD : want), steering);
    if (lidar_fresh) {
      r.requested_verdict = evaluate(*snap.lidar, zone, cfg_.filters, cfg_.geometry);
      in.cage_state_requested = r.requested_verdict->cage_state;
    } else {
      in.cage_state_requested = CageState::Occupied;
    }
  }

  r.decision = step(in, cfg_.caps);
  if (mode_request && r.decision.request_outcome) {
    ack(mode_request->ref_seq, r.decision.request_outcome->accepted, r.decision.request_outcome->reason);
  }
  mode_ = r.decision.new_mode;

  r.actuation.speed_cap = r.decision.speed_cap;
  r.actuation.brake = r.decision.brake;
  r.actuation.steering_hold = mode_ == DrivingMode::ES;
  r.actuation.mode = mode_;

  MissionState mission = snap.mission_state;
  if (mission == MissionState::Active && mode_ == DrivingMode::ES) mission = MissionState::Blocked;
  if (mission == MissionState::Blocked && mode_ != DrivingMode::ES) mission = MissionState::Active;

  const bool door_fresh = snap.door_timestamp_ms && *snap.door_timestamp_ms <= now &&
                          now - *snap.door_timestamp_ms <= cfg_.door_max_age_ms;

  const VehicleStateSummary prev = summary_;
  VehicleStateSummary& s = summary_;
  s.vehicle_id = cfg_.vehicle_id;
  s.sensor_data = sensor_validity;
  s.mission_state = mission;
  s.door_state = door_fresh ? snap.door_state : DoorState::NoData;
  s.driving_mode = mode_;
  s.cage_state = r.verdict.cage_state;
  s.timestamp_ms = now;
  s.seq = ++summary_seq_;
  r.summary = s;

  auto changed = [&](const char* kind, std::string_view from, std::string_view to) {
    if (from != to) r.events.push_back({kind, std::string(from), std::string(to)});
  };
  changed("ModeChanged", to_string(prev.driving_mode), to_string(s.driving_mode));
  changed("CageStateChanged", to_string(prev.cage_state), to_string(s.cage_state));
  changed("MissionStateChanged", to_string(prev.mission_state), to_string(s.mission_state));
  changed("DoorStateChanged", to_string(prev.door_state), to_string(s.door_state));
  changed("SensorDataChanged", to_string(prev.sensor_data), to_string(s.sensor_data));

  auto& t = r.telemetry;
  t.summary = s;
  t.pose = {snap.pose.x, snap.pose.y, snap.pose.heading, snap.pose.speed, snap.pose.steering};
  t.zone_mode = r.zone.mode_label;
  t.zone = r.zone.vertices;
  if (lidar_fresh) {
    const LidarScan kept = z_cutoff(*snap.lidar, cfg_.filters);
    const std::size_t n = kept.points.size();
    const std::size_t stride = (n + protocol::kMaxTelemetryScanPoints - 1) / protocol::kMaxTelemetryScanPoints;
    for (std::size_t i = 0; i < n && t.scan.size() < protocol::kMaxTelemetryScanPoints; i += std::max<std::size_t>(stride, 1)) {
      t.scan.emplace_back(kept.points[i].x(), kept.points[i].y());
    }
    const auto& off = r.verdict.offending_points;
    for (std::size_t i = 0; i < off.size() && t.offending.size() < protocol::kMaxTelemetryScanPoints; ++i) {
      t.offending.push_back(off[i]);
    }
  }
  t.front_camera = r.front_camera;
  t.back_camera = r.back_camera;
  t.cage_mode = cage_mode_;
  t.speed_cap = r.actuation.speed_cap;
  t.mission = snap.mission;
  t.outbox_drops = outbox_drops();

  for (const auto& a : r.acks) push_out(a, now);
  for (const auto& e : r.events) push_out(e, now);
  push_out(t, now);
  return r;
}

void DependabilityCage::enqueue(PendingCommand cmd) {
  std::lock_guard lock(queue_mu_);
  queue_.push_back(std::move(cmd));
}

void DependabilityCage::handle_ccc_message(const protocol::WireMessage& msg) {
  if (const auto* c = protocol::get_if<protocol::Command>(msg)) {
    enqueue({msg.seq, c->body});
    return;
  }
  std::lock_guard lock(out_mu_);
  push_locked(protocol::Error{msg.seq, "unexpected message type '" + std::string(msg.type()) + "'"}, last_clock_ms_);
}

void DependabilityCage::handle_ccc_frame(std::string_view body) {
  protocol::WireMessage msg;
  try {
    msg = protocol::decode(body);
  } catch (const ProtocolError& e) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    std::optional<std::uint64_t> ref;
    if (j.is_object() && j.contains("seq") && j["seq"].is_number_unsigned()) ref = j["seq"].get<std::uint64_t>();
    const bool is_command = j.is_object() && j.value("type", "") == "Command";
    std::lock_guard lock(out_mu_);
    protocol::Payload p;
    if (is_command && ref) {
      p = protocol::Ack{*ref, AckOutcome::Rejected, std::string("malformed command: ") + e.what()};
    } else {
      p = protocol::Error{ref, e.what()};
    }
    push_locked(std::move(p), last_clock_ms_);
    return;
  }
  handle_ccc_message(msg);
}

void DependabilityCage::push_out(protocol::Payload payload, std::int64_t now) {
  std::lock_guard lock(out_mu_);
  last_clock_ms_ = now;
  push_locked(std::move(payload), now);
}

void DependabilityCage::push_locked(protocol::Payload payload, std::int64_t now) {
  outbox_.push_back({cfg_.vehicle_id, ++out_seq_, now, std::move(payload)});
  while (outbox_.size() > cfg_.outbox_capacity) {
    outbox_.pop_front();
    ++drops_;
  }
}

std::vector<protocol::WireMessage> DependabilityCage::drain_outbox() {
  std::lock_guard lock(out_mu_);
  std::vector<protocol::WireMessage> out(std::make_move_iterator(outbox_.begin()), std::make_move_iterator(outbox_.end()));
  outbox_.clear();
  return out;
}

std::uint64_t DependabilityCage::outbox_drops() const {
  std::lock_guard lock(out_mu_);
  return drops_;
}

protocol::WireMessage DependabilityCage::register_message(std::int64_t now_ms, const std::string& software) {
  std::lock_guard lock(out_mu_);
  return {cfg_.vehicle_id, ++out_seq_, now_ms, protocol::Register{software, cfg_.tick_ms}};
}

}  // namespace dcage
