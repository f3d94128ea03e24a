#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "tunnelpilot/controller.hpp"
#include "tunnelpilot/dynamics.hpp"
#include "tunnelpilot/model.hpp"
#include "tunnelpilot/render.hpp"
#include "tunnelpilot/tunnel.hpp"

namespace tp {

enum class FlightOutcome { Completed, Collided, TimedOut };

const char* outcome_name(FlightOutcome o);

// Any frame classifier works here, so oracle policies (always-Center etc.)
// exercise the loop without a trained network.
using Classifier = std::function<Prediction(const GrayImage&)>;

Classifier constant_classifier(ClassLabel label);
Classifier model_classifier(std::shared_ptr<const CnnModel> model);

struct FlightConfig {
  SetpointConfig setpoints;
  PotentialFieldParams pf;
  DynamicsParams dynamics;
  CameraIntrinsics camera;
  IlluminationModel illum;

  double control_hz = 5.0;
  double physics_dt = 0.02;
  double max_time = 0.0;  // seconds of sim time; 0 sizes it from length/v_dx
  double start_s = 2.0;
  double start_lateral_jitter = 0.5;         // uniform bound, m
  double start_yaw_jitter = 5.0 * M_PI / 180.0;  // uniform bound, rad
  double mav_radius = 0.35;
  int smooth_window = 1;
  bool use_lidar = false;
  int lidar_beams = 36;
  double lidar_max_range = 10.0;
  uint64_t seed = 0;
};

struct FlightRow {
  double t = 0;
  MavState state;
  ClassLabel label = ClassLabel::Center;  // raw classifier output this tick
  VelocityCommand cmd;
  double clearance = 0;
};

struct FlightLog {
  std::vector<FlightRow> rows;
  FlightOutcome outcome = FlightOutcome::TimedOut;
  double end_time = 0;
  double end_s = 0;
};

// Sense -> classify -> command at control_hz, integrate physics at physics_dt
// substeps, collision-check every substep. The run ends on wall contact,
// on reaching the far end, or at max_time.
FlightLog run_closed_loop(const TunnelMap& tunnel, const Classifier& classify,
                          const FlightConfig& cfg);

// CSV with a '# key = value' preamble describing the run, then
// t,x,y,z,psi,vx,vy,vz,label,cmd_yaw_rate,clearance,outcome per control tick.
void write_flight_csv(const std::filesystem::path& path, const FlightLog& log,
                      const FlightConfig& cfg);

}  // namespace tp
