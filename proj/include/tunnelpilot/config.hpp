#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tunnelpilot/controller.hpp"
#include "tunnelpilot/datagen.hpp"
#include "tunnelpilot/flight.hpp"
#include "tunnelpilot/render.hpp"
#include "tunnelpilot/train.hpp"
#include "tunnelpilot/tunnel.hpp"

namespace tp {

// Flat `key = value` run configuration. Every key has a registered default;
// unknown keys are rejected on load and on override. '#' starts a comment
// line. The effective (fully resolved) form is echoed into output
// directories so any artifact can be reproduced.
class RunConfig {
 public:
  RunConfig();

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  // "key=value" as passed on a command line
  void set_pair(const std::string& pair);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string echo() const;  // sorted key = value lines
  void write_echo(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

TunnelParams tunnel_params_from(const RunConfig& cfg);
CameraIntrinsics camera_from(const RunConfig& cfg);
IlluminationModel illumination_from(const RunConfig& cfg);
DatasetGenConfig dataset_config_from(const RunConfig& cfg);
TrainConfig train_config_from(const RunConfig& cfg);
SetpointConfig setpoints_from(const RunConfig& cfg);
PotentialFieldParams potential_field_from(const RunConfig& cfg);
FlightConfig flight_config_from(const RunConfig& cfg);

}  // namespace tp
