#include "dcage/mode_control.hpp"

#include "dcage/errors.hpp"

namespace dcage {

double ModeCaps::cap(DrivingMode m) const {
  switch (m) {
    case DrivingMode::FAD: return fad;
    case DrivingMode::LAD: return lad;
    case DrivingMode::RMD: return rmd;
    case DrivingMode::IMD: return imd;
    case DrivingMode::ES: return es;
  }
  return 0.0;
}

void ModeCaps::validate() const {
  if (fad < 0 || lad < 0 || rmd < 0 || imd < 0) throw ConfigError("mode speed caps must be non-negative");
  if (es != 0.0) throw ConfigError("emergency stop speed cap must be 0");
  if (!(lad < fad)) throw ConfigError("LAD speed cap must be below the FAD cap");
}

double mode_speed_cap(DrivingMode mode) { return ModeCaps{}.cap(mode); }

double mode_speed_cap(DrivingMode mode, const ModeCaps& caps) { return caps.cap(mode); }

namespace {

bool cage_supervised(DrivingMode m) { return m == DrivingMode::FAD || m == DrivingMode::LAD || m == DrivingMode::RMD; }

bool human_controlled(DrivingMode m) { return m == DrivingMode::RMD || m == DrivingMode::IMD; }

ModeDecision decide(DrivingMode mode, std::optional<RequestOutcome> outcome, const ModeCaps& caps) {
  ModeDecision d;
  d.new_mode = mode;
  d.speed_cap = caps.cap(mode);
  d.brake = mode == DrivingMode::ES ? Brake::Full : Brake::None;
  if (mode == DrivingMode::ES) d.speed_cap = 0.0;
  d.request_outcome = std::move(outcome);
  return d;
}

RequestOutcome rejected(const char* why) { return {false, why}; }

}  // namespace

ModeDecision step(const ModeInputs& in, const ModeCaps& caps) {
  const bool fault = in.cage_state_current == CageState::Occupied || in.camera_validity == Validity::Invalid;

  if (in.cage_mode == CageMode::Active && cage_supervised(in.current_mode) && fault) {
    std::optional<RequestOutcome> outcome;
    if (in.operator_request) outcome = rejected(reasons::kFailSafe);
    return decide(DrivingMode::ES, outcome, caps);
  }

  if (!in.operator_request) return decide(in.current_mode, std::nullopt, caps);

  const DrivingMode target = *in.operator_request;
  const bool zone_free = in.cage_state_requested.value_or(CageState::Occupied) == CageState::Free;

  if (target == DrivingMode::ES) return decide(DrivingMode::ES, RequestOutcome{true, {}}, caps);

  if (in.current_mode == DrivingMode::ES) {
    if (human_controlled(target)) return decide(target, RequestOutcome{true, {}}, caps);
    if (!zone_free) return decide(DrivingMode::ES, rejected(reasons::kZoneOccupied), caps);
    if (in.camera_validity != Validity::Valid) return decide(DrivingMode::ES, rejected(reasons::kCameraInvalid), caps);
    return decide(target, RequestOutcome{true, {}}, caps);
  }

  if (!zone_free) return decide(in.current_mode, rejected(reasons::kZoneOccupied), caps);
  return decide(target, RequestOutcome{true, {}}, caps);
}

}  // namespace dcage
