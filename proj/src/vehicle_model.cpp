#include "dcage/vehicle_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dcage/errors.hpp"

namespace dcage {

VehiclePose step_vehicle(const VehiclePose& pose, const Controls& cmd, const ActuationCommand& caps, double dt,
                         const VehicleDynamics& dyn) {
  if (!(dt > 0.0 && dt <= 0.1)) throw DomainError("step_vehicle: dt must lie in (0, 0.1]");

  VehiclePose next = pose;
  if (!caps.steering_hold) {
    const double rate = std::clamp(cmd.steering_rate, -dyn.max_steering_rate, dyn.max_steering_rate);
    next.steering = std::clamp(pose.steering + rate * dt, -dyn.max_steering, dyn.max_steering);
  }

  const double v = pose.speed;
  next.x = pose.x + v * std::cos(pose.heading) * dt;
  next.y = pose.y + v * std::sin(pose.heading) * dt;
  next.heading = std::remainder(pose.heading + v * std::tan(next.steering) / dyn.wheelbase * dt,
                                2.0 * std::numbers::pi);

  if (caps.brake == Brake::Full) {
    next.speed = std::max(0.0, v - dyn.decel_max * dt);
  } else {
    const double accel = std::min(cmd.accel, dyn.max_accel);
    next.speed = std::clamp(v + accel * dt, 0.0, std::max(0.0, caps.speed_cap));
  }
  return next;
}

}  // namespace dcage
