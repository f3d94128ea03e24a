#include "tunnelpilot/tunnel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "tunnelpilot/angles.hpp"
#include "tunnelpilot/rng.hpp"

namespace tp {

namespace {

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

constexpr double kHitEps = 5e-4;   // margin below this counts as surface contact
constexpr double kMinStep = 2.5e-4;
constexpr int kMaxSteps = 20000;

}  // namespace

double TunnelMap::Relief::value(double u, double v) const {
  double s = 0;
  for (const auto& w : waves) s += w.w * std::sin(w.au * u + w.av * v + w.ph);
  return amplitude * s;
}

void TunnelMap::Relief::slope(double u, double v, double* du, double* dv) const {
  double su = 0, sv = 0;
  for (const auto& w : waves) {
    double c = std::cos(w.au * u + w.av * v + w.ph);
    su += w.w * w.au * c;
    sv += w.w * w.av * c;
  }
  *du = amplitude * su;
  *dv = amplitude * sv;
}

TunnelMap::CenterPose TunnelMap::center_at(double s) const {
  s = std::clamp(s, 0.0, params_.length);
  const Segment* seg = &segments_.back();
  for (const auto& sg : segments_) {
    if (s <= sg.s0 + sg.len) {
      seg = &sg;
      break;
    }
  }
  double t = std::clamp(s - seg->s0, 0.0, seg->len);
  CenterPose p;
  if (!seg->is_arc) {
    p.x = seg->px + t * seg->dx;
    p.y = seg->py + t * seg->dy;
    p.heading = seg->heading;
  } else {
    double phi = seg->a0 + seg->sweep * (t / seg->len);
    p.x = seg->cx + seg->radius * std::cos(phi);
    p.y = seg->cy + seg->radius * std::sin(phi);
    p.heading = wrap_angle(phi + (seg->sweep > 0 ? M_PI / 2 : -M_PI / 2));
  }
  return p;
}

TunnelMap::Candidate TunnelMap::closest_candidate(double x, double y) const {
  Candidate best;
  for (size_t i = 0; i < segments_.size(); ++i) {
    const Segment& sg = segments_[i];
    Candidate c;
    c.seg = static_cast<int>(i);
    if (!sg.is_arc) {
      double rx = x - sg.px, ry = y - sg.py;
      double t = std::clamp(rx * sg.dx + ry * sg.dy, 0.0, sg.len);
      double qx = sg.px + t * sg.dx, qy = sg.py + t * sg.dy;
      double ex = x - qx, ey = y - qy;
      c.dist2 = ex * ex + ey * ey;
      c.lateral = ex * -sg.dy + ey * sg.dx;  // dot with the left normal
      c.local = t;
    } else {
      double rx = x - sg.cx, ry = y - sg.cy;
      bool in_sector;
      if (sg.sweep > 0)
        in_sector = cross2(sg.u0x, sg.u0y, rx, ry) >= 0 &&
                    cross2(sg.u1x, sg.u1y, rx, ry) <= 0;
      else
        in_sector = cross2(sg.u0x, sg.u0y, rx, ry) <= 0 &&
                    cross2(sg.u1x, sg.u1y, rx, ry) >= 0;
      if (in_sector) {
        double d = std::sqrt(rx * rx + ry * ry);
        double off = d - sg.radius;
        c.dist2 = off * off;
        c.lateral = sg.sweep > 0 ? -off : off;  // CCW turn keeps the center on the left
        c.on_arc_interior = true;
        c.relx = rx;
        c.rely = ry;
      } else {
        double e0x = sg.cx + sg.radius * sg.u0x, e0y = sg.cy + sg.radius * sg.u0y;
        double e1x = sg.cx + sg.radius * sg.u1x, e1y = sg.cy + sg.radius * sg.u1y;
        double d0 = (x - e0x) * (x - e0x) + (y - e0y) * (y - e0y);
        double d1 = (x - e1x) * (x - e1x) + (y - e1y) * (y - e1y);
        double h, qx, qy;
        if (d0 <= d1) {
          c.dist2 = d0;
          c.local = 0;
          h = sg.heading;  // heading at the segment start
          qx = e0x;
          qy = e0y;
        } else {
          c.dist2 = d1;
          c.local = sg.len;
          h = wrap_angle(sg.heading + sg.sweep);
          qx = e1x;
          qy = e1y;
        }
        double tx = std::cos(h), ty = std::sin(h);
        c.lateral = (x - qx) * -ty + (y - qy) * tx;
      }
    }
    if (best.seg < 0 || c.dist2 < best.dist2) best = c;
  }
  return best;
}

TunnelMap::Resolved TunnelMap::resolve(const Candidate& c) const {
  const Segment& sg = segments_[c.seg];
  Resolved r;
  r.lateral = c.lateral;
  if (!sg.is_arc) {
    r.s = sg.s0 + c.local;
    r.tx = sg.dx;
    r.ty = sg.dy;
  } else if (c.on_arc_interior) {
    double phi = std::atan2(c.rely, c.relx);
    double delta = wrap_angle(phi - sg.a0);
    double along = sg.sweep > 0 ? delta : -delta;
    along = std::clamp(along, 0.0, std::abs(sg.sweep));
    r.s = sg.s0 + along * sg.radius;
    double d = std::hypot(c.relx, c.rely);
    double ux = c.relx / d, uy = c.rely / d;
    if (sg.sweep > 0) {
      r.tx = -uy;
      r.ty = ux;
    } else {
      r.tx = uy;
      r.ty = -ux;
    }
  } else {
    r.s = sg.s0 + c.local;
    double h = c.local == 0.0 ? sg.heading : wrap_angle(sg.heading + sg.sweep);
    r.tx = std::cos(h);
    r.ty = std::sin(h);
  }
  return r;
}

TunnelMap::Projection TunnelMap::project(double x, double y) const {
  Resolved r = resolve(closest_candidate(x, y));
  return {r.s, r.lateral};
}

double TunnelMap::exact_margin(double z, const Resolved& r, int* which) const {
  const double half_w = params_.width / 2.0;
  // flat margins in surface order: left wall, right wall, floor, ceiling
  double flat[4] = {half_w - r.lateral, half_w + r.lateral, z, params_.height - z};
  double u[4] = {r.s, r.s, r.s, r.s};
  double v[4] = {z, z, r.lateral, r.lateral};

  int order[4] = {0, 1, 2, 3};
  std::sort(order, order + 4, [&](int a, int b) { return flat[a] < flat[b]; });

  double best = std::numeric_limits<double>::infinity();
  int best_i = order[0];
  const double amp = params_.roughness;
  for (int oi = 0; oi < 4; ++oi) {
    int i = order[oi];
    if (flat[i] - amp >= best) break;  // cannot beat the running minimum
    double m = flat[i] - relief_[i].value(u[i], v[i]);
    if (m < best) {
      best = m;
      best_i = i;
    }
  }
  if (which) *which = best_i;
  return best;
}

double TunnelMap::surface_margin(double x, double y, double z) const {
  Resolved r = resolve(closest_candidate(x, y));
  return exact_margin(z, r, nullptr);
}

double TunnelMap::wall_margin(double x, double y, double z) const {
  Resolved r = resolve(closest_candidate(x, y));
  const double half_w = params_.width / 2.0;
  double left = half_w - r.lateral - relief_[0].value(r.s, z);
  double right = half_w + r.lateral - relief_[1].value(r.s, z);
  return std::min(left, right);
}

bool TunnelMap::inside(double x, double y, double z) const {
  return surface_margin(x, y, z) > 0.0;
}

TunnelMap::RayHit TunnelMap::cast_ray(double ox, double oy, double oz, double dx,
                                      double dy, double dz,
                                      double max_range) const {
  double norm = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(norm > 0.0))
    throw std::invalid_argument("cast_ray: direction must be non-zero");
  if (!(max_range > 0.0))
    throw std::invalid_argument("cast_ray: max_range must be positive");
  dx /= norm;
  dy /= norm;
  dz /= norm;
  if (surface_margin(ox, oy, oz) <= 0.0)
    throw std::runtime_error("cast_ray: origin outside tunnel");

  const double amp = params_.roughness;
  const double half_w = params_.width / 2.0;
  // below this bound the exact (relief-corrected) margin is evaluated
  const double near_band = std::max(0.02, 2.0 * kHitEps);

  // Upper bounds on how fast each surface margin can shrink along the ray:
  // wall margins move with the lateral offset (planar speed) and their relief
  // with (s, z); floor/ceiling margins move with z and their relief with
  // (s, lateral). Per-surface bounds keep grazing rays from crawling.
  const double h_pl = std::hypot(dx, dy);
  const double az = std::abs(dz);
  const double su = stretch_ * h_pl;  // max |ds/dt|
  const double rate[4] = {
      h_pl + slope_u_[0] * su + slope_v_[0] * az,
      h_pl + slope_u_[1] * su + slope_v_[1] * az,
      az + slope_u_[2] * su + slope_v_[2] * h_pl,
      az + slope_u_[3] * su + slope_v_[3] * h_pl,
  };

  double t = 0.0;
  for (int it = 0; it < kMaxSteps && t <= max_range; ++it) {
    double px = ox + t * dx, py = oy + t * dy, pz = oz + t * dz;
    Candidate c = closest_candidate(px, py);
    double flat[4] = {half_w - c.lateral, half_w + c.lateral, pz,
                      params_.height - pz};
    Resolved r;
    bool resolved = false;
    double step = max_range - t + kHitEps;
    double best_m = std::numeric_limits<double>::infinity();
    int which = -1;
    for (int i = 0; i < 4; ++i) {
      double lb = flat[i] - amp;
      if (lb >= near_band) {
        if (rate[i] > 0.0) step = std::min(step, lb / rate[i]);
        continue;
      }
      if (!resolved) {
        r = resolve(c);
        resolved = true;
      }
      double m = flat[i] - relief_[i].value(r.s, i < 2 ? pz : r.lateral);
      if (m < best_m) {
        best_m = m;
        which = i;
      }
      if (rate[i] > 0.0) step = std::min(step, std::max(m, 0.0) / rate[i]);
    }
    if (which >= 0 && best_m < kHitEps) {
      // The probe stops within kHitEps of the surface in margin space; on an
      // oblique ray that is up to kHitEps / (decay rate) early in ray space.
      // The margin is smooth at this scale, so Newton corrections with the
      // analytic decay rate land within ~1e-9 m. Grazing rays (vanishing
      // rate) keep the probe point: it already lies on the surface to within
      // kHitEps measured perpendicular.
      double g[3];
      margin_grad(which, r, pz, g);
      double decay = -(g[0] * dx + g[1] * dy + g[2] * dz);
      double tt = t;
      double m = best_m;
      if (decay > 1e-6 && m / decay < near_band) {
        for (int k = 0; k < 3 && std::abs(m) > 1e-9; ++k) {
          tt += m / decay;
          if (tt < t) {
            tt = t + std::max(best_m, 0.0);
            break;
          }
          m = surface_margin(ox + tt * dx, oy + tt * dy, oz + tt * dz);
        }
      } else {
        tt = t + std::max(best_m, 0.0);
      }
      if (tt > max_range) return {};  // the contact lies past the range cap

      RayHit hit;
      hit.hit = true;
      hit.distance = tt;
      Resolved rh = resolve(closest_candidate(ox + tt * dx, oy + tt * dy));
      int wh = which;
      exact_margin(oz + tt * dz, rh, &wh);
      margin_grad(wh, rh, oz + tt * dz, g);
      double nn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      hit.nx = g[0] / nn;
      hit.ny = g[1] / nn;
      hit.nz = g[2] / nn;
      return hit;
    }
    t += std::max(step, kMinStep);
  }
  return {};
}

void TunnelMap::margin_grad(int which, const Resolved& r, double z, double* g) const {
  double du, dv;
  relief_[which].slope(r.s, which < 2 ? z : r.lateral, &du, &dv);
  switch (which) {
    case 0:  // left wall: margin = w/2 - lateral - relief(s, z)
      g[0] = r.ty - du * r.tx;
      g[1] = -r.tx - du * r.ty;
      g[2] = -dv;
      break;
    case 1:  // right wall: margin = w/2 + lateral - relief(s, z)
      g[0] = -r.ty - du * r.tx;
      g[1] = r.tx - du * r.ty;
      g[2] = -dv;
      break;
    case 2:  // floor: margin = z - relief(s, lateral)
      g[0] = -du * r.tx + dv * r.ty;
      g[1] = -du * r.ty - dv * r.tx;
      g[2] = 1.0;
      break;
    default:  // ceiling: margin = h - z - relief(s, lateral)
      g[0] = -du * r.tx + dv * r.ty;
      g[1] = -du * r.ty - dv * r.tx;
      g[2] = -1.0;
      break;
  }
}

void TunnelMap::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("tunnel file: cannot open " + path.string() + " for writing");
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "# procedural tunnel parameters\n"
                "width = %.17g\n"
                "height = %.17g\n"
                "length = %.17g\n"
                "arc_angle_deg = %.17g\n"
                "straight_frac = %.17g\n"
                "roughness = %.17g\n"
                "seed = %llu\n",
                params_.width, params_.height, params_.length,
                params_.arc_angle_deg, params_.straight_frac, params_.roughness,
                static_cast<unsigned long long>(params_.seed));
  f << buf;
  if (!f) throw std::runtime_error("tunnel file: write failed for " + path.string());
}

TunnelMap TunnelMap::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("tunnel file: cannot open " + path.string());
  std::map<std::string, double> values;
  std::string line;
  while (std::getline(f, line)) {
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("tunnel file: malformed line '" + line + "'");
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      size_t used = 0;
      double d = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
      values[key] = d;
    } catch (const std::exception&) {
      throw std::runtime_error("tunnel file: bad value for '" + key + "'");
    }
  }

  TunnelParams p;
  auto take = [&](const char* key, double* out) {
    auto it = values.find(key);
    if (it == values.end())
      throw std::runtime_error(std::string("tunnel file: missing key '") + key + "'");
    *out = it->second;
    values.erase(it);
  };
  take("width", &p.width);
  take("height", &p.height);
  take("length", &p.length);
  take("arc_angle_deg", &p.arc_angle_deg);
  take("straight_frac", &p.straight_frac);
  take("roughness", &p.roughness);
  double seed = 0;
  take("seed", &seed);
  p.seed = static_cast<uint64_t>(seed);
  if (!values.empty())
    throw std::runtime_error("tunnel file: unknown key '" + values.begin()->first + "'");
  return generate_tunnel(p);
}

TunnelMap generate_tunnel(const TunnelParams& params) {
  if (!(params.width > 0) || !(params.height > 0) || !(params.length > 0))
    throw std::invalid_argument("tunnel: dimensions must be positive");
  if (!(params.roughness >= 0) || params.roughness >= params.width / 4.0)
    throw std::invalid_argument("tunnel: roughness must be non-negative and below width/4");
  if (params.arc_angle_deg < 0 || params.arc_angle_deg > 90)
    throw std::invalid_argument("tunnel: arc angle must be in [0, 90] degrees");
  if (params.straight_frac < 0 || params.straight_frac > 0.5)
    throw std::invalid_argument("tunnel: straight fraction must be in [0, 0.5]");

  TunnelMap map;
  map.params_ = params;

  const double straight_len = params.straight_frac * params.length;
  const double arc_len = (params.length - 2 * straight_len) / 2.0;
  const double theta = deg_to_rad(params.arc_angle_deg);

  double x = 0, y = 0, heading = 0, s = 0;
  auto add_straight = [&](double len) {
    if (len < 1e-9) return;
    TunnelMap::Segment sg;
    sg.is_arc = false;
    sg.s0 = s;
    sg.len = len;
    sg.px = x;
    sg.py = y;
    sg.dx = std::cos(heading);
    sg.dy = std::sin(heading);
    sg.heading = heading;
    x += len * sg.dx;
    y += len * sg.dy;
    s += len;
    map.segments_.push_back(sg);
  };
  auto add_arc = [&](double len, double turn) {
    if (len < 1e-9) return;
    if (turn == 0.0) {
      add_straight(len);
      return;
    }
    TunnelMap::Segment sg;
    sg.is_arc = true;
    sg.s0 = s;
    sg.len = len;
    sg.radius = len / std::abs(turn);
    sg.sweep = turn;
    sg.heading = heading;
    double side = turn > 0 ? 1.0 : -1.0;  // center sits left of the tangent for CCW
    sg.cx = x + sg.radius * side * -std::sin(heading);
    sg.cy = y + sg.radius * side * std::cos(heading);
    sg.a0 = std::atan2(y - sg.cy, x - sg.cx);
    sg.u0x = std::cos(sg.a0);
    sg.u0y = std::sin(sg.a0);
    double a1 = sg.a0 + sg.sweep;
    sg.u1x = std::cos(a1);
    sg.u1y = std::sin(a1);
    x = sg.cx + sg.radius * sg.u1x;
    y = sg.cy + sg.radius * sg.u1y;
    heading = wrap_angle(heading + turn);
    s += len;
    map.segments_.push_back(sg);
  };

  add_straight(straight_len);
  add_arc(arc_len, theta);
  add_arc(arc_len, -theta);
  add_straight(straight_len);
  if (map.segments_.empty())
    throw std::invalid_argument("tunnel: degenerate centerline");

  double min_radius = std::numeric_limits<double>::infinity();
  for (const auto& sg : map.segments_)
    if (sg.is_arc) min_radius = std::min(min_radius, sg.radius);
  if (std::isfinite(min_radius) && min_radius < params.width)
    throw std::invalid_argument("tunnel: arcs too tight for the width");

  // seeded surface relief; wavelengths long enough to keep slopes shallow
  const double amp = params.roughness;
  const double lu_min = std::max(8.0, 25.0 * amp);
  const double lv_min = std::max(4.0, 18.0 * amp);
  for (int surf = 0; surf < 4; ++surf) {
    Rng rng(mix_seed(params.seed ^ (0x51700ULL + surf)));
    TunnelMap::Relief& rel = map.relief_[surf];
    rel.amplitude = amp;
    double wsum = 0;
    for (auto& w : rel.waves) {
      w.au = 2.0 * M_PI / rng.uniform(lu_min, 3.0 * lu_min);
      w.av = 2.0 * M_PI / rng.uniform(lv_min, 3.0 * lv_min);
      if (rng.below(2) == 1) w.av = -w.av;
      w.ph = rng.uniform(0.0, 2.0 * M_PI);
      w.w = rng.uniform(0.5, 1.5);
      wsum += w.w;
    }
    double su = 0, sv = 0;
    for (auto& w : rel.waves) {
      w.w /= wsum;
      su = std::max(su, std::abs(w.au));
      sv = std::max(sv, std::abs(w.av));
    }
    map.slope_u_[surf] = amp * su;
    map.slope_v_[surf] = amp * sv;
  }

  // lateral chart stretch: arclength changes fastest near the inner arc wall
  if (std::isfinite(min_radius))
    map.stretch_ = 1.0 / (1.0 - (params.width / 2.0 + amp) / min_radius);
  return map;
}

}  // namespace tp
