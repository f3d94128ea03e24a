#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tunnelpilot/image.hpp"
#include "tunnelpilot/label.hpp"
#include "tunnelpilot/render.hpp"
#include "tunnelpilot/tunnel.hpp"

namespace tp {

struct DatasetGenConfig {
  int n_per_class = 1800;
  double camera_offset = M_PI / 6;  // rad; Left looks +offset (left of axis)
  double altitude = 1.0;            // m
  double lateral_jitter = 0.5;      // uniform bound, m
  double vertical_jitter = 0.1;     // uniform bound, m
  double s_margin = 3.0;            // keep-out from both tunnel ends, m
  double illum_min_mult = 0.25;     // headlamp multiplier range, log-uniform
  double illum_max_mult = 2.0;
  uint64_t seed = 7;
  CameraIntrinsics camera;
  IlluminationModel illum;
};

struct DatasetSample {
  GrayImage image;
  ClassLabel label;
  double s = 0;           // pose arclength
  double illum_mult = 1;  // headlamp multiplier drawn for the pose
};

// Three views per pose: yaw = tangent + offset (Left), tangent (Center),
// tangent - offset (Right). Poses are evenly spaced along the centerline with
// seeded lateral/vertical jitter; one illumination multiplier and one sensor
// noise stream are drawn per pose and shared by its three views.
std::vector<DatasetSample> generate_dataset(const TunnelMap& tunnel,
                                            const DatasetGenConfig& cfg);

// <root>/{left,center,right}/NNNNN.pgm plus metadata.csv
void write_dataset(const std::filesystem::path& root,
                   const std::vector<DatasetSample>& samples);

}  // namespace tp
