#pragma once

#include <cstdint>

#include "tunnelpilot/controller.hpp"
#include "tunnelpilot/dynamics.hpp"
#include "tunnelpilot/image.hpp"
#include "tunnelpilot/tunnel.hpp"

namespace tp {

struct CameraIntrinsics {
  int width = 128, height = 128;
  double fov_h = M_PI / 2;   // horizontal field of view, radians
  double max_range = 25.0;   // render ray cutoff, m (headlamp is black past this)
};

// Headlamp co-located with the camera. Pixel value before noise:
//   clamp01(ambient + intensity * max(0, cos(theta)) / (1 + (d/falloff)^2))
// where theta is the angle between the inward surface normal and the ray
// back toward the lamp. intensity 1.0 puts a frontal wall at 1 m near 180/255.
struct IlluminationModel {
  double intensity = 1.0;
  double ambient = 0.02;
  double falloff = 1.55;     // m
  double noise_sigma = 2.0;  // additive Gaussian sensor noise, gray levels
};

// Pinhole render from the MAV pose (camera at (x, y, z) yawed psi, level).
// Gaussian noise is seeded, one draw per pixel, so renders are deterministic.
GrayImage render_camera(const TunnelMap& tunnel, const MavState& state,
                        const CameraIntrinsics& cam, const IlluminationModel& illum,
                        uint64_t noise_seed);

// n_beams evenly spaced over [-pi, pi) in the body frame, ranges capped at
// max_range. Beams come back in increasing bearing order.
LidarScan simulate_lidar(const TunnelMap& tunnel, const MavState& state,
                         int n_beams, double max_range);

}  // namespace tp
