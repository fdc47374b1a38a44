#pragma once

#include "dcage/vehicle_state.hpp"

namespace dcage {

/// World-frame pose of the rear-axle center plus the kinematic state.
struct VehiclePose {
  double x{0.0};
  double y{0.0};
  double heading{0.0};
  double speed{0.0};
  double steering{0.0};
};

struct Controls {
  double accel{0.0};          // m/s^2
  double steering_rate{0.0};  // rad/s
};

struct VehicleDynamics {
  double wheelbase{2.0};
  double decel_max{2.0};  // applied under full brake
  double max_steering{0.6};
  double max_steering_rate{1.0};
  double max_accel{1.0};
};

/// Kinematic bicycle step (explicit Euler). Steering and its rate are
/// clamped to the dynamics limits, speed to [0, caps.speed_cap]; a full brake
/// decelerates at decel_max until standstill. Requires dt in (0, 0.1].
VehiclePose step_vehicle(const VehiclePose& pose, const Controls& cmd, const ActuationCommand& caps, double dt,
                         const VehicleDynamics& dyn = {});

}  // namespace dcage
