#pragma once

#include "tunnelpilot/controller.hpp"
#include "tunnelpilot/tunnel.hpp"

namespace tp {

struct MavState {
  double x = 0, y = 0, z = 0;
  double psi = 0;                  // yaw, z-up CCW, wrapped to (-pi, pi]
  double vx = 0, vy = 0, vz = 0;   // realized body-frame velocity
};

struct DynamicsParams {
  double tau_v = 0.4;  // planar velocity lag, s; 0 means instantaneous
  double tau_z = 0.8;  // altitude lag, s
};

// First-order velocity lag integrated exactly over dt (the discrete update
// composes: two dt/2 steps equal one dt step), yaw integrated and wrapped,
// position advanced by the body velocity rotated through the pre-update yaw.
// Altitude relaxes toward the commanded setpoint with tau_z.
MavState step_dynamics(const MavState& state, const VelocityCommand& cmd,
                       double dt, const DynamicsParams& params);

struct ClearanceResult {
  double clearance = 0;  // wall margin minus the body radius
  bool collided = false;
};

// Lateral walls only; floor and ceiling do not count as collisions.
ClearanceResult check_collision(const TunnelMap& tunnel, const MavState& state,
                                double radius);

}  // namespace tp
