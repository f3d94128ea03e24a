#include "tunnelpilot/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace tp {

GrayImage::GrayImage(int w, int h, uint8_t fill) : width(w), height(h) {
  if (w <= 0 || h <= 0)
    throw std::invalid_argument("image: dimensions must be positive");
  data.assign(static_cast<size_t>(w) * h, fill);
}

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0)
    throw std::invalid_argument("image: dimensions must be positive");
  data.assign(static_cast<size_t>(w) * h * 3, 0);
}

namespace {

struct Cursor {
  const uint8_t* p;
  const uint8_t* end;
  bool eof() const { return p >= end; }
};

bool is_space(uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Skips whitespace and '#' comments (to end of line). Returns false if the
// header ends before any token starts.
bool skip_separators(Cursor& c) {
  while (!c.eof()) {
    if (is_space(*c.p)) {
      ++c.p;
    } else if (*c.p == '#') {
      while (!c.eof() && *c.p != '\n') ++c.p;
    } else {
      return true;
    }
  }
  return false;
}

// Reads one unsigned decimal header field.
uint64_t read_header_uint(Cursor& c) {
  if (!skip_separators(c) || *c.p < '0' || *c.p > '9')
    throw std::runtime_error("pgm: malformed header");
  uint64_t v = 0;
  while (!c.eof() && *c.p >= '0' && *c.p <= '9') {
    v = v * 10 + (*c.p - '0');
    if (v > 1000000000ULL) throw std::runtime_error("pgm: malformed header");
    ++c.p;
  }
  return v;
}

}  // namespace

GrayImage load_pgm(std::span<const uint8_t> bytes) {
  Cursor c{bytes.data(), bytes.data() + bytes.size()};
  if (bytes.size() < 2 || c.p[0] != 'P' || c.p[1] != '5')
    throw std::runtime_error("pgm: bad magic, expected P5");
  c.p += 2;

  uint64_t w = read_header_uint(c);
  uint64_t h = read_header_uint(c);
  uint64_t maxval = read_header_uint(c);
  if (w == 0 || h == 0 || w * h > (1ULL << 30))
    throw std::runtime_error("pgm: malformed header");
  if (maxval == 0) throw std::runtime_error("pgm: malformed header");
  if (maxval > 255)
    throw std::runtime_error("pgm: unsupported maxval " + std::to_string(maxval) +
                             " (wide samples not handled)");

  // exactly one whitespace byte separates the header from the payload
  if (c.eof() || !is_space(*c.p)) throw std::runtime_error("pgm: malformed header");
  ++c.p;

  size_t need = static_cast<size_t>(w) * h;
  size_t have = static_cast<size_t>(c.end - c.p);
  if (have < need) throw std::runtime_error("pgm: truncated pixel payload");

  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  std::copy(c.p, c.p + need, img.data.begin());
  // Rescale if the file uses a smaller range; keeps full-scale at 255.
  if (maxval != 255) {
    for (auto& px : img.data)
      px = static_cast<uint8_t>(std::lround(px * 255.0 / static_cast<double>(maxval)));
  }
  return img;
}

std::vector<uint8_t> save_pgm(const GrayImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.data.size() != static_cast<size_t>(img.width) * img.height)
    throw std::invalid_argument("pgm: image buffer does not match dimensions");
  char header[64];
  int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", img.width,
                        img.height);
  std::vector<uint8_t> out(header, header + n);
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

GrayImage load_pgm_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("pgm: cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return load_pgm(bytes);
}

void save_pgm_file(const GrayImage& img, const std::filesystem::path& path) {
  auto bytes = save_pgm(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("pgm: cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("pgm: write failed for " + path.string());
}

GrayImage rgb_to_gray(const RgbImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.data.size() != static_cast<size_t>(img.width) * img.height * 3)
    throw std::invalid_argument("rgb_to_gray: image buffer does not match dimensions");
  GrayImage out(img.width, img.height);
  const uint8_t* src = img.data.data();
  for (size_t i = 0; i < out.data.size(); ++i, src += 3) {
    double y = 0.299 * src[0] + 0.587 * src[1] + 0.114 * src[2];
    out.data[i] = static_cast<uint8_t>(std::lround(y));
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
  if (img.width <= 0 || img.height <= 0 || img.data.empty())
    throw std::invalid_argument("resize: empty source image");
  if (out_width <= 0 || out_height <= 0)
    throw std::invalid_argument("resize: output dimensions must be positive");

  GrayImage out(out_width, out_height);
  double sx = static_cast<double>(img.width) / out_width;
  double sy = static_cast<double>(img.height) / out_height;
  for (int oy = 0; oy < out_height; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = fy - y0;
    for (int ox = 0; ox < out_width; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = fx - x0;
      double top = img.at(x0, y0) * (1.0 - wx) + img.at(x1, y0) * wx;
      double bot = img.at(x0, y1) * (1.0 - wx) + img.at(x1, y1) * wx;
      double v = top * (1.0 - wy) + bot * wy;
      out.at(ox, oy) = static_cast<uint8_t>(std::lround(v));
    }
  }
  return out;
}

std::vector<size_t> downsample_sequence(size_t frame_count, double src_fps,
                                        double dst_fps) {
  if (!(dst_fps > 0.0) || !(src_fps > 0.0) || dst_fps > src_fps)
    throw std::invalid_argument("downsample: need 0 < dst_fps <= src_fps");
  std::vector<size_t> kept;
  double ratio = src_fps / dst_fps;
  for (size_t k = 0;; ++k) {
    double pos = static_cast<double>(k) * ratio;
    auto idx = static_cast<size_t>(std::llround(pos));
    if (idx >= frame_count) break;
    if (kept.empty() || idx > kept.back()) kept.push_back(idx);
  }
  return kept;
}

Tensor image_to_tensor(const GrayImage& img) {
  if (img.width <= 0 || img.height <= 0)
    throw std::invalid_argument("image_to_tensor: empty image");
  Tensor t({img.height, img.width, 1});
  for (size_t i = 0; i < img.data.size(); ++i)
    t.data[i] = static_cast<float>(img.data[i]) / 255.0f;
  return t;
}

Tensor to_input_tensor(const GrayImage& img) {
  if (img.width != 128 || img.height != 128)
    throw std::invalid_argument("input tensor: image must be 128x128");
  return image_to_tensor(img);
}

}  // namespace tp
