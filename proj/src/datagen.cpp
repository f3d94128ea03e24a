#include "tunnelpilot/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "tunnelpilot/angles.hpp"
#include "tunnelpilot/dynamics.hpp"
#include "tunnelpilot/rng.hpp"

namespace tp {

std::vector<DatasetSample> generate_dataset(const TunnelMap& tunnel,
                                            const DatasetGenConfig& cfg) {
  if (cfg.n_per_class < 1)
    throw std::invalid_argument("dataset: n_per_class must be at least 1");
  if (cfg.camera_offset < 0 || cfg.camera_offset > M_PI / 2)
    throw std::invalid_argument("dataset: camera offset must be in [0, pi/2]");
  if (!(cfg.illum_min_mult > 0) || cfg.illum_max_mult < cfg.illum_min_mult)
    throw std::invalid_argument("dataset: bad illumination multiplier range");
  const double usable = tunnel.length() - 2 * cfg.s_margin;
  if (usable <= 0)
    throw std::invalid_argument("dataset: tunnel too short for the end margins");

  // jitter can never push a pose into a wall
  double max_lat = tunnel.width() / 2 - tunnel.params().roughness - 0.3;
  double lat_jitter = std::min(cfg.lateral_jitter, std::max(0.0, max_lat));

  Rng rng(mix_seed(cfg.seed ^ 0xDA7AULL));
  std::vector<DatasetSample> out;
  out.reserve(static_cast<size_t>(cfg.n_per_class) * kNumClasses);

  for (int i = 0; i < cfg.n_per_class; ++i) {
    double s = cfg.s_margin + usable * (i + 0.5) / cfg.n_per_class;
    auto center = tunnel.center_at(s);
    double lat = lat_jitter > 0 ? rng.uniform(-lat_jitter, lat_jitter) : 0.0;
    double dz = cfg.vertical_jitter > 0
                    ? rng.uniform(-cfg.vertical_jitter, cfg.vertical_jitter)
                    : 0.0;
    double mult = std::exp(rng.uniform(std::log(cfg.illum_min_mult),
                                       std::log(cfg.illum_max_mult)));
    uint64_t noise_seed = rng.next_u64();

    MavState pose;
    pose.x = center.x - lat * std::sin(center.heading);
    pose.y = center.y + lat * std::cos(center.heading);
    pose.z = cfg.altitude + dz;

    IlluminationModel illum = cfg.illum;
    illum.intensity = cfg.illum.intensity * mult;

    const struct {
      ClassLabel label;
      double offset;
    } views[] = {
        {ClassLabel::Left, cfg.camera_offset},
        {ClassLabel::Center, 0.0},
        {ClassLabel::Right, -cfg.camera_offset},
    };
    for (const auto& view : views) {
      MavState vp = pose;
      vp.psi = wrap_angle(center.heading + view.offset);
      DatasetSample sample;
      sample.image = render_camera(tunnel, vp, cfg.camera, illum, noise_seed);
      sample.label = view.label;
      sample.s = s;
      sample.illum_mult = mult;
      out.push_back(std::move(sample));
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& root,
                   const std::vector<DatasetSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("dataset: nothing to write");
  for (ClassLabel l : kAllLabels)
    std::filesystem::create_directories(root / label_name(l));

  std::ofstream meta(root / "metadata.csv", std::ios::trunc);
  if (!meta)
    throw std::runtime_error("dataset: cannot open metadata.csv for writing");
  meta << "file,label,s,illum_mult\n";

  int counter[kNumClasses] = {};
  char name[32], line[160];
  for (const auto& sample : samples) {
    int idx = counter[label_index(sample.label)]++;
    std::snprintf(name, sizeof(name), "%05d.pgm", idx);
    auto rel = std::filesystem::path(label_name(sample.label)) / name;
    save_pgm_file(sample.image, root / rel);
    std::snprintf(line, sizeof(line), "%s,%s,%.9g,%.9g\n",
                  rel.generic_string().c_str(), label_name(sample.label),
                  sample.s, sample.illum_mult);
    meta << line;
  }
  if (!meta) throw std::runtime_error("dataset: metadata write failed");
}

}  // namespace tp
