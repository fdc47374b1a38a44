#pragma once

#include <optional>
#include <string>

#include "dcage/driving_mode.hpp"

namespace dcage {

/// Per-mode speed limits in m/s.
struct ModeCaps {
  double fad{3.0};
  double lad{1.0};
  double rmd{1.0};
  double imd{0.0};
  double es{0.0};

  double cap(DrivingMode m) const;
  void validate() const;
};

/// Speed limit of `mode` under the default caps.
double mode_speed_cap(DrivingMode mode);
double mode_speed_cap(DrivingMode mode, const ModeCaps& caps);

struct ModeInputs {
  DrivingMode current_mode{DrivingMode::FAD};
  CageState cage_state_current{CageState::Free};
  std::optional<CageState> cage_state_requested;  // set iff operator_request is set
  Validity camera_validity{Validity::Valid};
  std::optional<DrivingMode> operator_request;
  CageMode cage_mode{CageMode::Active};
  double speed{0.0};
  double steering_angle{0.0};
};

enum class Brake { None, Full };

struct RequestOutcome {
  bool accepted{false};
  std::string reason;  // empty when accepted

  bool operator==(const RequestOutcome&) const = default;
};

struct ModeDecision {
  DrivingMode new_mode{DrivingMode::FAD};
  double speed_cap{0.0};
  Brake brake{Brake::None};
  std::optional<RequestOutcome> request_outcome;

  bool operator==(const ModeDecision&) const = default;
};

namespace reasons {
inline constexpr const char* kFailSafe = "fail-safe triggered";
inline constexpr const char* kZoneOccupied = "requested mode zone occupied";
inline constexpr const char* kCameraInvalid = "camera data invalid";
}  // namespace reasons

/// One evaluation of the mode-control rules.
///
/// - Under an active cage, an occupied zone or invalid camera while in FAD,
///   LAD or RMD forces ES with full braking; a pending request is rejected.
/// - ES is only left on operator request. From ES, requests to RMD or IMD
///   are granted outright; requests to an autonomous mode need the requested
///   mode's zone free and the camera valid.
/// - Outside ES a request is granted when the requested mode's zone is free.
/// - A request for ES itself is always granted.
ModeDecision step(const ModeInputs& inputs, const ModeCaps& caps = {});

}  // namespace dcage
