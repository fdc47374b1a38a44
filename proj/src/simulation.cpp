#include "dcage/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "dcage/errors.hpp"

namespace dcage {

Simulation::Simulation(Scenario scenario) : sc_(std::move(scenario)), rng_(sc_.sim.seed), pose_(sc_.start_pose) {}

SensorSnapshot Simulation::sense() {
  SensorSnapshot s;
  s.clock_ms = now_ms_;
  s.pose = pose_;

  LidarScan scan = raycast_lidar(sc_.world, pose_, sc_.lidar, sc_.faults, now_ms_, rng_);
  scan.seq = ++scan_seq_;
  s.lidar = std::move(scan);

  for (CameraId id : {CameraId::Front, CameraId::Back}) {
    const auto k = static_cast<std::size_t>(id);
    CameraFrame f = synthesize_frame(id, ++frame_seq_[k], now_ms_);
    if (sc_.faults.camera_frozen(id, now_ms_) && last_frame_[k]) {
      f.pixels = last_frame_[k]->pixels;  // stuck sensor: same image, fresh header
    }
    last_frame_[k] = f;
    (id == CameraId::Front ? s.front_camera : s.back_camera) = std::move(f);
  }

  s.door_state = door_;
  s.door_timestamp_ms = now_ms_;
  s.mission_state = mission_.state;
  if (mission_.state != MissionState::Inactive) {
    s.mission = protocol::MissionData{mission_.id, mission_.waypoints, static_cast<std::int64_t>(mission_.current_target)};
  }
  return s;
}

std::optional<std::string> Simulation::assign(const MissionAssignment& assignment) {
  Mission next;
  try {
    next = assign_mission(mission_, assignment);
  } catch (const DomainError& e) {
    return e.what();
  }
  try {
    path_ = build_mission_path(sc_.world, {pose_.x, pose_.y}, assignment.waypoints);
  } catch (const ConfigError& e) {
    return e.what();
  }
  mission_ = std::move(next);
  progress_ = 0.0;
  return std::nullopt;
}

Controls Simulation::controls_for(const ActuationCommand& cmd) {
  Controls hold{-sc_.dynamics.decel_max, 0.0};
  switch (cmd.mode) {
    case DrivingMode::FAD:
    case DrivingMode::LAD: {
      if (mission_.state != MissionState::Active || mission_.phase != MissionPhase::Driving ||
          mission_.current_target >= path_.stop_stations.size()) {
        return hold;
      }
      const AdsOutput out =
          ads_step(path_.path, progress_, path_.stop_stations[mission_.current_target], pose_, cmd, sc_.dynamics, sc_.ads);
      progress_ = out.progress;
      return out.controls;
    }
    case DrivingMode::RMD: {
      if (!manual_) return hold;
      Controls c;
      c.accel = std::clamp(sc_.ads.speed_gain * (manual_->target_speed - pose_.speed), -sc_.dynamics.decel_max,
                           sc_.dynamics.max_accel);
      c.steering_rate = sc_.ads.steering_gain * (manual_->steering - pose_.steering);
      return c;
    }
    case DrivingMode::IMD:
    case DrivingMode::ES:
      return hold;
  }
  return hold;
}

void Simulation::apply(const ActuationCommand& cmd) {
  if (cmd.assign_mission) assign(*cmd.assign_mission);
  if (cmd.door && pose_.speed <= sc_.mission_cfg.stop_speed) {
    door_ = *cmd.door == DoorAction::Open ? DoorState::Open : DoorState::Closed;
  }
  if (cmd.mode != DrivingMode::RMD) manual_.reset();
  if (cmd.manual) manual_ = *cmd.manual;

  const Controls c = controls_for(cmd);
  pose_ = step_vehicle(pose_, c, cmd, dt(), sc_.dynamics);
  now_ms_ += sc_.sim.tick_ms;

  const MissionStep step = mission_update(mission_, sc_.world, pose_, cmd.mode, door_, dt(), sc_.mission_cfg);
  if (step.arrived) {
    deliveries_.push_back({mission_.waypoints[mission_.current_target], now_ms_, std::nullopt, cmd.mode, cmd.mode});
  }
  if (step.delivered && !deliveries_.empty()) {
    deliveries_.back().departed_ms = now_ms_;
    deliveries_.back().mode_at_departure = cmd.mode;
  }
  mission_ = step.mission;
  if (step.door_request && pose_.speed <= sc_.mission_cfg.stop_speed) {
    door_ = *step.door_request == DoorAction::Open ? DoorState::Open : DoorState::Closed;
  }
}

Point2d Simulation::front_bumper_world() const {
  return to_world(sc_.geometry.front_bumper_mid(), Point2d{pose_.x, pose_.y}, pose_.heading);
}

Polygon2d Simulation::footprint_world() const {
  Polygon2d out;
  for (const auto& p : sc_.geometry.footprint()) out.push_back(to_world(p, Point2d{pose_.x, pose_.y}, pose_.heading));
  return out;
}

}  // namespace dcage
