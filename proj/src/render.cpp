#include "tunnelpilot/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tunnelpilot/rng.hpp"

namespace tp {

namespace {

// cos/sin built odd/even in the argument bit pattern, so mirrored poses give
// exactly mirrored ray bundles (the symmetry tests compare renders bitwise)
void yaw_trig(double psi, double* c, double* s) {
  double a = std::abs(psi);
  *c = std::cos(a);
  *s = std::copysign(std::sin(a), psi);
}

}  // namespace

GrayImage render_camera(const TunnelMap& tunnel, const MavState& state,
                        const CameraIntrinsics& cam, const IlluminationModel& illum,
                        uint64_t noise_seed) {
  if (cam.width <= 0 || cam.height <= 0)
    throw std::invalid_argument("render: image dimensions must be positive");
  if (!(cam.fov_h > 0.0) || !(cam.fov_h < M_PI))
    throw std::invalid_argument("render: fov must be in (0, pi)");
  if (!(cam.max_range > 0.0))
    throw std::invalid_argument("render: max_range must be positive");
  if (illum.intensity < 0 || illum.ambient < 0 || !(illum.falloff > 0) ||
      illum.noise_sigma < 0)
    throw std::invalid_argument("render: bad illumination parameters");
  if (!tunnel.inside(state.x, state.y, state.z))
    throw std::runtime_error("render: camera pose outside tunnel");

  double c, s;
  yaw_trig(state.psi, &c, &s);
  const double fx = c, fy = s;        // forward
  const double rx = s, ry = -c;       // right (z-up frame)

  const double tan_h = std::tan(cam.fov_h / 2.0);
  const double tan_v = tan_h * static_cast<double>(cam.height) / cam.width;
  const double cx = (cam.width - 1) * 0.5;
  const double cy = (cam.height - 1) * 0.5;

  Rng rng(mix_seed(noise_seed));
  GrayImage img(cam.width, cam.height);
  for (int py = 0; py < cam.height; ++py) {
    double v = ((cy - py) / (cam.height * 0.5)) * tan_v;
    for (int px = 0; px < cam.width; ++px) {
      double u = ((px - cx) / (cam.width * 0.5)) * tan_h;
      double dx = fx + u * rx;
      double dy = fy + u * ry;
      double dz = v;
      double inv = 1.0 / std::sqrt(dx * dx + dy * dy + dz * dz);
      dx *= inv;
      dy *= inv;
      dz *= inv;

      double val = illum.ambient;
      auto hit = tunnel.cast_ray(state.x, state.y, state.z, dx, dy, dz,
                                 cam.max_range);
      if (hit.hit) {
        double cosv = -(dx * hit.nx + dy * hit.ny + dz * hit.nz);
        if (cosv > 0.0) {
          double q = hit.distance / illum.falloff;
          val += illum.intensity * cosv / (1.0 + q * q);
        }
      }
      val = std::clamp(val, 0.0, 1.0) * 255.0;
      if (illum.noise_sigma > 0.0) val += illum.noise_sigma * rng.normal();
      img.at(px, py) = static_cast<uint8_t>(std::clamp(std::lround(val), 0L, 255L));
    }
  }
  return img;
}

LidarScan simulate_lidar(const TunnelMap& tunnel, const MavState& state,
                         int n_beams, double max_range) {
  if (n_beams < 1) throw std::invalid_argument("lidar: need at least one beam");
  if (!(max_range > 0.0))
    throw std::invalid_argument("lidar: max_range must be positive");
  if (!tunnel.inside(state.x, state.y, state.z))
    throw std::runtime_error("lidar: scan pose outside tunnel");

  LidarScan scan;
  scan.max_range = max_range;
  scan.beams.reserve(n_beams);
  for (int i = 0; i < n_beams; ++i) {
    double bearing = -M_PI + 2.0 * M_PI * i / n_beams;
    double a = state.psi + bearing;
    auto hit = tunnel.cast_ray(state.x, state.y, state.z, std::cos(a),
                               std::sin(a), 0.0, max_range);
    double range = hit.hit ? std::min(hit.distance, max_range) : max_range;
    scan.beams.push_back({bearing, range});
  }
  return scan;
}

}  // namespace tp
