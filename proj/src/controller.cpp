#include "tunnelpilot/controller.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace tp {

double class_to_heading_rate(ClassLabel label, const SetpointConfig& cfg) {
  if (!(cfg.yaw_rate_magnitude >= 0.0))
    throw std::invalid_argument("controller: yaw rate magnitude must be non-negative");
  switch (label) {
    case ClassLabel::Left: return -cfg.yaw_rate_magnitude;
    case ClassLabel::Center: return 0.0;
    case ClassLabel::Right: return cfg.yaw_rate_magnitude;
  }
  throw std::invalid_argument("controller: bad label");
}

ClassLabel smooth_labels(std::span<const ClassLabel> window) {
  if (window.empty()) throw std::invalid_argument("smooth_labels: empty window");
  std::array<int, kNumClasses> votes{};
  for (ClassLabel l : window) votes[label_index(l)]++;
  int best = votes[0];
  for (int v : votes) best = std::max(best, v);
  // ties resolve to the most recent label among the tied classes
  for (size_t i = window.size(); i-- > 0;) {
    if (votes[label_index(window[i])] == best) return window[i];
  }
  return window.back();  // unreachable
}

PlanarVelocity potential_field_velocity(const LidarScan& scan,
                                        const SetpointConfig& cfg,
                                        const PotentialFieldParams& pf) {
  if (scan.beams.empty())
    throw std::invalid_argument("potential field: empty scan");
  if (!(pf.d0 > 0.0))
    throw std::invalid_argument("potential field: cutoff must be positive");

  double fx = cfg.v_dx, fy = 0.0;
  for (const auto& beam : scan.beams) {
    if (!(beam.range > 0.0))
      throw std::invalid_argument("potential field: beam range must be positive");
    if (beam.range >= pf.d0) continue;
    double mag = pf.k_rep * (1.0 / beam.range - 1.0 / pf.d0) /
                 (beam.range * beam.range);
    fx -= mag * std::cos(beam.bearing);
    fy -= mag * std::sin(beam.bearing);
  }

  double v_max = pf.v_max_factor * cfg.v_dx;
  double norm = std::hypot(fx, fy);
  if (norm > v_max && norm > 0.0) {
    fx *= v_max / norm;
    fy *= v_max / norm;
  }
  return {fx, fy};
}

VelocityCommand assemble_command(ClassLabel label, const LidarScan* scan,
                                 const SetpointConfig& cfg,
                                 const PotentialFieldParams& pf) {
  VelocityCommand cmd;
  if (scan) {
    PlanarVelocity v = potential_field_velocity(*scan, cfg, pf);
    cmd.vx = v.vx;
    cmd.vy = v.vy;
  } else {
    cmd.vx = cfg.v_dx;
    cmd.vy = cfg.v_dy;
  }
  cmd.vz_or_z = cfg.z_d;
  cmd.yaw_rate = class_to_heading_rate(label, cfg);
  return cmd;
}

}  // namespace tp
