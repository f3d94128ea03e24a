#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tunnelpilot/tensor.hpp"

namespace tp {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // row-major, width*height bytes

  GrayImage() = default;
  GrayImage(int w, int h, uint8_t fill = 0);

  uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // width*height*3 bytes

  RgbImage() = default;
  RgbImage(int w, int h);
};

// Binary PGM (P5), maxval up to 255. The parser accepts '#' comments anywhere
// whitespace may appear in the header. Errors are distinct: bad magic,
// malformed header, unsupported maxval, truncated pixel payload.
GrayImage load_pgm(std::span<const uint8_t> bytes);
std::vector<uint8_t> save_pgm(const GrayImage& img);
GrayImage load_pgm_file(const std::filesystem::path& path);
void save_pgm_file(const GrayImage& img, const std::filesystem::path& path);

// BT.601 luma, rounded to nearest: 0.299 R + 0.587 G + 0.114 B.
GrayImage rgb_to_gray(const RgbImage& img);

// Bilinear resample with pixel-center alignment:
//   src = (dst + 0.5) * (src_extent / dst_extent) - 0.5, clamped to the edge.
GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height);

// Frame indices kept when a src_fps stream is thinned to dst_fps:
// round(k * src_fps / dst_fps) for k = 0, 1, ... while in range, deduplicated.
// Frame 0 is always kept. Requires 0 < dst_fps <= src_fps.
std::vector<size_t> downsample_sequence(size_t frame_count, double src_fps,
                                        double dst_fps);

// (height, width, 1) float tensor with values in [0, 1] (intensity / 255).
Tensor image_to_tensor(const GrayImage& img);

// Classifier input adapter; requires exactly 128x128.
Tensor to_input_tensor(const GrayImage& img);

}  // namespace tp
