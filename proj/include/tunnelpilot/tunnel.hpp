#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tp {

struct TunnelParams {
  double width = 6.0;    // m, wall to wall
  double height = 4.0;   // m, floor to ceiling
  double length = 300.0; // m of centerline
  double arc_angle_deg = 45.0;  // turn of each S arc; 0 gives a straight tunnel
  double straight_frac = 0.2;   // centerline fraction of each straight end
  double roughness = 0.15;      // surface relief amplitude, m; must be < width/4
  uint64_t seed = 1;
};

// Procedural mine drift: straight / left arc / right arc / straight centerline
// (an S curve), rectangular cross-section, and smooth seeded sinusoidal relief
// on all four surfaces. Floor is z=0, ceiling z=height; the centerline starts
// at the origin heading +x. World frame is z-up, yaw CCW-positive.
class TunnelMap {
 public:
  struct CenterPose {
    double x = 0, y = 0;
    double heading = 0;  // tangent yaw, radians
  };
  struct Projection {
    double s = 0;        // arclength of the closest centerline point
    double lateral = 0;  // signed offset, positive = left of the tangent
  };
  struct RayHit {
    bool hit = false;
    double distance = 0;
    double nx = 0, ny = 0, nz = 0;  // inward surface normal at the hit
  };

  const TunnelParams& params() const { return params_; }
  double length() const { return params_.length; }
  double width() const { return params_.width; }
  double height() const { return params_.height; }

  CenterPose center_at(double s) const;  // s clamped to [0, length]
  Projection project(double x, double y) const;

  // Signed distance-like margin to the nearest of the four surfaces
  // (positive inside). Exact relief included.
  double surface_margin(double x, double y, double z) const;
  // Same, lateral walls only (the collision test ignores floor/ceiling).
  double wall_margin(double x, double y, double z) const;
  bool inside(double x, double y, double z) const;

  // Marches from an interior origin along (dx,dy,dz). Reports the first
  // surface contact within max_range to sub-millimetre accuracy, with the
  // inward normal. Throws if the origin is outside the tunnel.
  RayHit cast_ray(double ox, double oy, double oz, double dx, double dy,
                  double dz, double max_range) const;

  void save(const std::filesystem::path& path) const;
  static TunnelMap load(const std::filesystem::path& path);

 private:
  friend TunnelMap generate_tunnel(const TunnelParams& params);
  TunnelMap() = default;

  struct Segment {
    bool is_arc = false;
    double s0 = 0, len = 0;
    // straight
    double px = 0, py = 0, dx = 0, dy = 0, heading = 0;
    // arc
    double cx = 0, cy = 0, radius = 0, a0 = 0, sweep = 0;  // sweep sign = turn direction
    double u0x = 0, u0y = 0, u1x = 0, u1y = 0;  // radial unit vectors at the ends
  };

  struct Relief {
    // amplitude * sum_i w_i sin(au_i u + av_i v + ph_i), sum w_i = 1
    struct Wave {
      double au = 0, av = 0, ph = 0, w = 0;
    };
    std::array<Wave, 3> waves;
    double amplitude = 0;
    double value(double u, double v) const;
    void slope(double u, double v, double* du, double* dv) const;
  };

  // candidate projection before the arclength is resolved
  struct Candidate {
    int seg = -1;
    double lateral = 0;     // signed, valid for the winning segment
    double dist2 = 0;       // squared planar distance to the centerline
    double local = 0;       // arclength within the segment (straights only)
    bool on_arc_interior = false;
    double relx = 0, rely = 0;  // arc: point minus center
  };

  Candidate closest_candidate(double x, double y) const;
  // full projection data: arclength s, tangent (tx, ty)
  struct Resolved {
    double s = 0, lateral = 0, tx = 1, ty = 0;
  };
  Resolved resolve(const Candidate& c) const;

  double exact_margin(double z, const Resolved& r, int* which) const;
  // gradient of surface `which`'s margin at the resolved point, which is also
  // the unnormalized inward surface normal
  void margin_grad(int which, const Resolved& r, double z, double* g) const;

  std::vector<Segment> segments_;
  std::array<Relief, 4> relief_;  // left wall, right wall, floor, ceiling
  TunnelParams params_;
  // Stepping bounds for cast_ray: chart stretch (max |ds/dxy|, >1 inside
  // arcs) and per-surface relief slope maxima amplitude*|au|, amplitude*|av|.
  double stretch_ = 1.0;
  std::array<double, 4> slope_u_{};
  std::array<double, 4> slope_v_{};
};

TunnelMap generate_tunnel(const TunnelParams& params);

}  // namespace tp
