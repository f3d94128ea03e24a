#pragma once

#include <span>
#include <vector>

#include "tunnelpilot/label.hpp"

namespace tp {

// Yaw is measured about z (up), counterclockwise positive. A Left frame means
// the camera points left of the tunnel axis, so the corrective rate is
// negative (turn right, away from the left wall).

struct SetpointConfig {
  double v_dx = 0.1;                // forward body velocity, m/s
  double v_dy = 0.0;                // lateral body velocity, m/s
  double z_d = 1.0;                 // altitude setpoint, m
  double yaw_rate_magnitude = 0.2;  // rad/s
};

struct VelocityCommand {
  double vx = 0.0, vy = 0.0, vz_or_z = 0.0;  // z here is an altitude setpoint
  double yaw_rate = 0.0;
};

double class_to_heading_rate(ClassLabel label, const SetpointConfig& cfg);

// Majority vote over the most recent window; ties go to the most recent
// label. window must be non-empty.
ClassLabel smooth_labels(std::span<const ClassLabel> window);

struct LidarBeam {
  double bearing = 0.0;  // body frame, radians, CCW from forward
  double range = 0.0;    // m, capped at max_range
};

struct LidarScan {
  std::vector<LidarBeam> beams;  // bearings strictly increasing
  double max_range = 0.0;
};

struct PotentialFieldParams {
  double d0 = 2.0;     // repulsion cutoff, m
  double k_rep = 0.05;
  double v_max_factor = 1.5;  // cap = factor * v_dx
};

// Attractive forward pull (v_dx, 0) plus one repulsive contribution per beam
// inside the cutoff, pushing opposite the beam bearing with magnitude
// k_rep * (1/R - 1/d0) / R^2. The resulting velocity is norm-clamped.
// Returns body-frame (vx, vy).
struct PlanarVelocity {
  double vx = 0.0, vy = 0.0;
};
PlanarVelocity potential_field_velocity(const LidarScan& scan,
                                        const SetpointConfig& cfg,
                                        const PotentialFieldParams& pf);

// Full command for one control tick. With a scan, the planar part comes from
// the potential field; without one, the fixed setpoints are used.
VelocityCommand assemble_command(ClassLabel label, const LidarScan* scan,
                                 const SetpointConfig& cfg,
                                 const PotentialFieldParams& pf);

}  // namespace tp
