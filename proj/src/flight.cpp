#include "tunnelpilot/flight.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "tunnelpilot/angles.hpp"
#include "tunnelpilot/rng.hpp"

namespace tp {

const char* outcome_name(FlightOutcome o) {
  switch (o) {
    case FlightOutcome::Completed: return "completed";
    case FlightOutcome::Collided: return "collided";
    case FlightOutcome::TimedOut: return "timed_out";
  }
  return "unknown";
}

Classifier constant_classifier(ClassLabel label) {
  return [label](const GrayImage&) {
    Prediction p{};
    p.label = label;
    p.probabilities = {0.0f, 0.0f, 0.0f};
    p.probabilities[label_index(label)] = 1.0f;
    return p;
  };
}

Classifier model_classifier(std::shared_ptr<const CnnModel> model) {
  if (!model) throw std::invalid_argument("classifier: null model");
  return [model](const GrayImage& img) { return predict(*model, img); };
}

FlightLog run_closed_loop(const TunnelMap& tunnel, const Classifier& classify,
                          const FlightConfig& cfg) {
  if (!classify) throw std::invalid_argument("flight: classifier is empty");
  if (!(cfg.control_hz > 0.0))
    throw std::invalid_argument("flight: control rate must be positive");
  if (!(cfg.physics_dt > 0.0))
    throw std::invalid_argument("flight: physics_dt must be positive");
  const double period = 1.0 / cfg.control_hz;
  const int substeps = static_cast<int>(std::llround(period / cfg.physics_dt));
  if (substeps < 1 || std::abs(substeps * cfg.physics_dt - period) > 1e-9)
    throw std::invalid_argument(
        "flight: control period must be an integer multiple of physics_dt");
  if (cfg.smooth_window < 1)
    throw std::invalid_argument("flight: smoothing window must be at least 1");
  if (cfg.start_s < 0.0 || cfg.start_s >= tunnel.length())
    throw std::invalid_argument("flight: start arclength outside the tunnel");

  double max_time = cfg.max_time;
  if (max_time <= 0.0)
    max_time = 1.5 * tunnel.length() / std::max(cfg.setpoints.v_dx, 0.01) + 120.0;

  Rng rng(mix_seed(cfg.seed ^ 0xf117ULL));
  auto start = tunnel.center_at(cfg.start_s);
  double lat = cfg.start_lateral_jitter > 0
                   ? rng.uniform(-cfg.start_lateral_jitter, cfg.start_lateral_jitter)
                   : 0.0;
  double yaw_off = cfg.start_yaw_jitter > 0
                       ? rng.uniform(-cfg.start_yaw_jitter, cfg.start_yaw_jitter)
                       : 0.0;

  MavState state;
  state.x = start.x - lat * std::sin(start.heading);
  state.y = start.y + lat * std::cos(start.heading);
  state.z = cfg.setpoints.z_d;
  state.psi = wrap_angle(start.heading + yaw_off);

  FlightLog log;
  log.outcome = FlightOutcome::TimedOut;

  if (!tunnel.inside(state.x, state.y, state.z))
    throw std::runtime_error("flight: start pose outside tunnel");

  std::deque<ClassLabel> window;
  double t = 0.0;
  uint64_t tick = 0;
  bool done = false;
  while (!done && t < max_time - 0.5 * cfg.physics_dt) {
    uint64_t frame_seed = mix_seed(cfg.seed ^ (0xCA11ED00ULL + tick));
    GrayImage frame = render_camera(tunnel, state, cfg.camera, cfg.illum, frame_seed);
    ClassLabel raw = classify(frame).label;

    window.push_back(raw);
    while (static_cast<int>(window.size()) > cfg.smooth_window) window.pop_front();
    std::vector<ClassLabel> win(window.begin(), window.end());
    ClassLabel smoothed = smooth_labels(win);

    VelocityCommand cmd;
    if (cfg.use_lidar) {
      LidarScan scan = simulate_lidar(tunnel, state, cfg.lidar_beams,
                                      cfg.lidar_max_range);
      cmd = assemble_command(smoothed, &scan, cfg.setpoints, cfg.pf);
    } else {
      cmd = assemble_command(smoothed, nullptr, cfg.setpoints, cfg.pf);
    }

    FlightRow row;
    row.t = t;
    row.state = state;
    row.label = raw;
    row.cmd = cmd;
    row.clearance = check_collision(tunnel, state, cfg.mav_radius).clearance;
    log.rows.push_back(row);

    for (int sub = 0; sub < substeps; ++sub) {
      state = step_dynamics(state, cmd, cfg.physics_dt, cfg.dynamics);
      t += cfg.physics_dt;
      auto col = check_collision(tunnel, state, cfg.mav_radius);
      if (col.collided) {
        log.outcome = FlightOutcome::Collided;
        done = true;
        break;
      }
      double s = tunnel.project(state.x, state.y).s;
      if (s >= tunnel.length() - 1e-6) {
        log.outcome = FlightOutcome::Completed;
        done = true;
        break;
      }
    }
    ++tick;
  }

  log.end_time = t;
  log.end_s = tunnel.project(state.x, state.y).s;
  return log;
}

void write_flight_csv(const std::filesystem::path& path, const FlightLog& log,
                      const FlightConfig& cfg) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("flight log: cannot open " + path.string() + " for writing");
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "# seed = %llu\n"
                "# v_dx = %.9g\n"
                "# z_d = %.9g\n"
                "# yaw_rate = %.9g\n"
                "# control_hz = %.9g\n"
                "# physics_dt = %.9g\n"
                "# mav_radius = %.9g\n"
                "# outcome = %s\n",
                static_cast<unsigned long long>(cfg.seed), cfg.setpoints.v_dx,
                cfg.setpoints.z_d, cfg.setpoints.yaw_rate_magnitude,
                cfg.control_hz, cfg.physics_dt, cfg.mav_radius,
                outcome_name(log.outcome));
  f << buf;
  f << "t,x,y,z,psi,vx,vy,vz,label,cmd_yaw_rate,clearance,outcome\n";
  for (const auto& r : log.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s,%.9g,%.9g,%s\n",
                  r.t, r.state.x, r.state.y, r.state.z, r.state.psi, r.state.vx,
                  r.state.vy, r.state.vz, label_name(r.label), r.cmd.yaw_rate,
                  r.clearance, outcome_name(log.outcome));
    f << buf;
  }
  if (!f) throw std::runtime_error("flight log: write failed for " + path.string());
}

}  // namespace tp
