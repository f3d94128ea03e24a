#include "tunnelpilot/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "tunnelpilot/angles.hpp"

namespace tp {

MavState step_dynamics(const MavState& state, const VelocityCommand& cmd,
                       double dt, const DynamicsParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("dynamics: dt must be positive");
  if (params.tau_v < 0.0 || params.tau_z < 0.0)
    throw std::invalid_argument("dynamics: time constants must be non-negative");

  MavState next = state;

  double blend_v = params.tau_v == 0.0 ? 1.0 : 1.0 - std::exp(-dt / params.tau_v);
  next.vx = state.vx + blend_v * (cmd.vx - state.vx);
  next.vy = state.vy + blend_v * (cmd.vy - state.vy);

  // altitude tracks the setpoint directly; store the closing rate as vz
  double blend_z = params.tau_z == 0.0 ? 1.0 : 1.0 - std::exp(-dt / params.tau_z);
  double dz = blend_z * (cmd.vz_or_z - state.z);
  next.z = state.z + dz;
  next.vz = dz / dt;

  // body velocity rotated by the pre-update yaw
  double c = std::cos(state.psi), s = std::sin(state.psi);
  next.x = state.x + dt * (c * next.vx - s * next.vy);
  next.y = state.y + dt * (s * next.vx + c * next.vy);

  next.psi = wrap_angle(state.psi + cmd.yaw_rate * dt);
  return next;
}

ClearanceResult check_collision(const TunnelMap& tunnel, const MavState& state,
                                double radius) {
  if (!(radius >= 0.0))
    throw std::invalid_argument("collision: radius must be non-negative");
  double margin = tunnel.wall_margin(state.x, state.y, state.z);
  ClearanceResult r;
  r.clearance = margin - radius;
  r.collided = r.clearance <= 0.0;
  return r;
}

}  // namespace tp
