#include "tunnelpilot/config.hpp"

#include <fstream>
#include <stdexcept>

#include "tunnelpilot/angles.hpp"

namespace tp {

namespace {

const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"tunnel.width", "6.0"},
      {"tunnel.height", "4.0"},
      {"tunnel.length", "300.0"},
      {"tunnel.arc_angle_deg", "45.0"},
      {"tunnel.straight_frac", "0.2"},
      {"tunnel.roughness", "0.15"},
      {"tunnel.seed", "1"},

      {"camera.width", "128"},
      {"camera.height", "128"},
      {"camera.fov_deg", "90.0"},
      {"render.max_range", "25.0"},

      {"illum.intensity", "1.0"},
      {"illum.ambient", "0.02"},
      {"illum.falloff", "1.55"},
      {"illum.noise_sigma", "2.0"},

      {"dataset.n_per_class", "1800"},
      {"dataset.offset_deg", "30.0"},
      {"dataset.altitude", "1.0"},
      {"dataset.lateral_jitter", "0.5"},
      {"dataset.vertical_jitter", "0.1"},
      {"dataset.s_margin", "3.0"},
      {"dataset.illum_min_mult", "0.25"},
      {"dataset.illum_max_mult", "2.0"},
      {"dataset.seed", "7"},

      {"train.epochs", "25"},
      {"train.steps_per_epoch", "200"},
      {"train.batch_size", "32"},
      {"train.learning_rate", "0.001"},
      {"train.holdout_ratio", "0.1"},
      {"train.split_seed", "101"},
      {"train.seed", "42"},

      {"control.v_dx", "0.1"},
      {"control.v_dy", "0.0"},
      {"control.z_d", "1.0"},
      {"control.yaw_rate", "0.2"},
      {"control.smooth_window", "1"},
      {"control.use_lidar", "false"},

      {"pf.d0", "2.0"},
      {"pf.k_rep", "0.05"},
      {"pf.v_max_factor", "1.5"},

      {"lidar.beams", "36"},
      {"lidar.max_range", "10.0"},

      {"dyn.tau_v", "0.4"},
      {"dyn.tau_z", "0.8"},

      {"mav.radius", "0.35"},

      {"fly.control_hz", "5.0"},
      {"fly.physics_dt", "0.02"},
      {"fly.max_time", "0"},
      {"fly.start_s", "2.0"},
      {"fly.lateral_jitter", "0.5"},
      {"fly.yaw_jitter_deg", "5.0"},
      {"fly.seed", "99"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(config_defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::runtime_error("config: unknown key '" + key + "'");
  it->second = value;
}

void RunConfig::set_pair(const std::string& pair) {
  size_t eq = pair.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("config: override must look like key=value, got '" +
                             pair + "'");
  set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: " + path.string() + ":" +
                               std::to_string(lineno) + ": expected key = value");
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::runtime_error("config: unknown key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
}

int RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    long n = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(n);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' has non-integer value '" + v + "'");
  }
}

uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    unsigned long long n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<uint64_t>(n);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' has non-integer value '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: key '" + key + "' has non-boolean value '" + v + "'");
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::write_echo(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("config: cannot open " + path.string() + " for writing");
  f << echo();
  if (!f) throw std::runtime_error("config: write failed for " + path.string());
}

TunnelParams tunnel_params_from(const RunConfig& cfg) {
  TunnelParams p;
  p.width = cfg.get_double("tunnel.width");
  p.height = cfg.get_double("tunnel.height");
  p.length = cfg.get_double("tunnel.length");
  p.arc_angle_deg = cfg.get_double("tunnel.arc_angle_deg");
  p.straight_frac = cfg.get_double("tunnel.straight_frac");
  p.roughness = cfg.get_double("tunnel.roughness");
  p.seed = cfg.get_u64("tunnel.seed");
  return p;
}

CameraIntrinsics camera_from(const RunConfig& cfg) {
  CameraIntrinsics c;
  c.width = cfg.get_int("camera.width");
  c.height = cfg.get_int("camera.height");
  c.fov_h = deg_to_rad(cfg.get_double("camera.fov_deg"));
  c.max_range = cfg.get_double("render.max_range");
  return c;
}

IlluminationModel illumination_from(const RunConfig& cfg) {
  IlluminationModel m;
  m.intensity = cfg.get_double("illum.intensity");
  m.ambient = cfg.get_double("illum.ambient");
  m.falloff = cfg.get_double("illum.falloff");
  m.noise_sigma = cfg.get_double("illum.noise_sigma");
  return m;
}

DatasetGenConfig dataset_config_from(const RunConfig& cfg) {
  DatasetGenConfig d;
  d.n_per_class = cfg.get_int("dataset.n_per_class");
  d.camera_offset = deg_to_rad(cfg.get_double("dataset.offset_deg"));
  d.altitude = cfg.get_double("dataset.altitude");
  d.lateral_jitter = cfg.get_double("dataset.lateral_jitter");
  d.vertical_jitter = cfg.get_double("dataset.vertical_jitter");
  d.s_margin = cfg.get_double("dataset.s_margin");
  d.illum_min_mult = cfg.get_double("dataset.illum_min_mult");
  d.illum_max_mult = cfg.get_double("dataset.illum_max_mult");
  d.seed = cfg.get_u64("dataset.seed");
  d.camera = camera_from(cfg);
  d.illum = illumination_from(cfg);
  return d;
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig t;
  t.epochs = cfg.get_int("train.epochs");
  t.steps_per_epoch = cfg.get_int("train.steps_per_epoch");
  t.batch_size = cfg.get_int("train.batch_size");
  t.learning_rate = cfg.get_double("train.learning_rate");
  t.seed = cfg.get_u64("train.seed");
  return t;
}

SetpointConfig setpoints_from(const RunConfig& cfg) {
  SetpointConfig s;
  s.v_dx = cfg.get_double("control.v_dx");
  s.v_dy = cfg.get_double("control.v_dy");
  s.z_d = cfg.get_double("control.z_d");
  s.yaw_rate_magnitude = cfg.get_double("control.yaw_rate");
  return s;
}

PotentialFieldParams potential_field_from(const RunConfig& cfg) {
  PotentialFieldParams p;
  p.d0 = cfg.get_double("pf.d0");
  p.k_rep = cfg.get_double("pf.k_rep");
  p.v_max_factor = cfg.get_double("pf.v_max_factor");
  return p;
}

FlightConfig flight_config_from(const RunConfig& cfg) {
  FlightConfig f;
  f.setpoints = setpoints_from(cfg);
  f.pf = potential_field_from(cfg);
  f.dynamics.tau_v = cfg.get_double("dyn.tau_v");
  f.dynamics.tau_z = cfg.get_double("dyn.tau_z");
  f.camera = camera_from(cfg);
  f.illum = illumination_from(cfg);
  f.control_hz = cfg.get_double("fly.control_hz");
  f.physics_dt = cfg.get_double("fly.physics_dt");
  f.max_time = cfg.get_double("fly.max_time");
  f.start_s = cfg.get_double("fly.start_s");
  f.start_lateral_jitter = cfg.get_double("fly.lateral_jitter");
  f.start_yaw_jitter = deg_to_rad(cfg.get_double("fly.yaw_jitter_deg"));
  f.mav_radius = cfg.get_double("mav.radius");
  f.smooth_window = cfg.get_int("control.smooth_window");
  f.use_lidar = cfg.get_bool("control.use_lidar");
  f.lidar_beams = cfg.get_int("lidar.beams");
  f.lidar_max_range = cfg.get_double("lidar.max_range");
  f.seed = cfg.get_u64("fly.seed");
  return f;
}

}  // namespace tp
