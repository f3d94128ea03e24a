#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "tunnelpilot/image.hpp"

using namespace tp;

namespace {

std::vector<uint8_t> bytes_of(const std::string& header,
                              std::initializer_list<uint8_t> payload = {}) {
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

}  // namespace

TEST_CASE("load_pgm reads a minimal P5 file") {
  auto img = load_pgm(bytes_of("P5\n1 1\n255\n", {0x2a}));
  CHECK(img.width == 1);
  CHECK(img.height == 1);
  CHECK(img.data[0] == 0x2a);
}

TEST_CASE("load_pgm accepts comments and mixed whitespace in the header") {
  auto img = load_pgm(bytes_of("P5 # magic\n# a comment line\n 2\t1 # dims\n255\n", {7, 9}));
  CHECK(img.width == 2);
  CHECK(img.height == 1);
  CHECK(img.at(0, 0) == 7);
  CHECK(img.at(1, 0) == 9);
}

TEST_CASE("load_pgm rescales sub-255 maxval to full range") {
  // maxval 85: value 85 -> 255, 17 -> round(17*3) = 51
  auto img = load_pgm(bytes_of("P5\n2 1\n85\n", {85, 17}));
  CHECK(img.at(0, 0) == 255);
  CHECK(img.at(1, 0) == 51);
}

TEST_CASE("load_pgm error cases are distinct") {
  CHECK_THROWS_WITH_AS(load_pgm(bytes_of("P6\n1 1\n255\n", {1, 2, 3})),
                       doctest::Contains("bad magic"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_pgm(bytes_of("P5\n1\n255\n", {0})),
                       doctest::Contains("malformed header"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_pgm(bytes_of("P5\n1 1\n65535\n", {0, 0})),
                       doctest::Contains("unsupported maxval"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_pgm(bytes_of("P5\n2 2\n255\n", {1, 2, 3})),
                       doctest::Contains("truncated"), std::runtime_error);
  CHECK_THROWS_AS(load_pgm(bytes_of("")), std::runtime_error);
}

TEST_CASE("save_pgm emits a canonical header and round-trips") {
  GrayImage img(3, 2);
  for (int i = 0; i < 6; ++i) img.data[i] = static_cast<uint8_t>(i * 40);
  auto bytes = save_pgm(img);
  const std::string expect_header = "P5\n3 2\n255\n";
  REQUIRE(bytes.size() == expect_header.size() + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + expect_header.size()) ==
        expect_header);
  auto back = load_pgm(bytes);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("pgm file round-trip") {
  GrayImage img(4, 3);
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<uint8_t>(7 * i + 3);
  auto path = std::filesystem::temp_directory_path() / "tp_test_roundtrip.pgm";
  save_pgm_file(img, path);
  auto back = load_pgm_file(path);
  std::filesystem::remove(path);
  CHECK(back.data == img.data);
  CHECK(back.width == 4);
  CHECK(back.height == 3);
}

TEST_CASE("rgb_to_gray uses BT.601 weights") {
  RgbImage rgb(3, 1);
  // pure red, pure green, pure blue
  uint8_t px[9] = {255, 0, 0, 0, 255, 0, 0, 0, 255};
  rgb.data.assign(px, px + 9);
  auto gray = rgb_to_gray(rgb);
  CHECK(gray.at(0, 0) == 76);   // round(0.299*255)
  CHECK(gray.at(1, 0) == 150);  // round(0.587*255)
  CHECK(gray.at(2, 0) == 29);   // round(0.114*255)
}

TEST_CASE("resize_bilinear identity when sizes match") {
  GrayImage img(5, 4);
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<uint8_t>(11 * i);
  auto out = resize_bilinear(img, 5, 4);
  CHECK(out.data == img.data);
}

TEST_CASE("resize_bilinear 2x1 -> 4x1 interpolates with center alignment") {
  GrayImage img(2, 1);
  img.data = {0, 255};
  auto out = resize_bilinear(img, 4, 1);
  REQUIRE(out.width == 4);
  // src coords: -0.25 (clamp 0), 0.25, 0.75, 1.25 (clamp 1)
  CHECK(out.data[0] == 0);
  CHECK(out.data[1] == 64);   // round(0.25*255)
  CHECK(out.data[2] == 191);  // round(0.75*255)
  CHECK(out.data[3] == 255);
}

TEST_CASE("resize_bilinear downscale averages neighborhoods") {
  GrayImage img(4, 1);
  img.data = {0, 100, 200, 100};
  auto out = resize_bilinear(img, 2, 1);
  REQUIRE(out.width == 2);
  // src = (dst+0.5)*2 - 0.5 -> 0.5 and 2.5: midpoints of the pairs
  CHECK(out.data[0] == 50);
  CHECK(out.data[1] == 150);
}

TEST_CASE("downsample_sequence 30 -> 10 fps keeps every third frame") {
  auto idx = downsample_sequence(10, 30.0, 10.0);
  CHECK(idx == std::vector<size_t>{0, 3, 6, 9});
}

TEST_CASE("downsample_sequence non-integer ratio rounds per frame") {
  auto idx = downsample_sequence(10, 30.0, 12.0);
  // k*2.5 rounded: 0, 2.5->2 (ties to even? llround: 3), 5, 7.5->8, 10 (oob)
  CHECK(idx == std::vector<size_t>{0, 3, 5, 8});
}

TEST_CASE("downsample_sequence equal rates keeps everything") {
  auto idx = downsample_sequence(4, 25.0, 25.0);
  CHECK(idx == std::vector<size_t>{0, 1, 2, 3});
}

TEST_CASE("downsample_sequence rejects upsampling and zero rates") {
  CHECK_THROWS_AS(downsample_sequence(5, 10.0, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(downsample_sequence(5, 10.0, 0.0), std::invalid_argument);
}

TEST_CASE("image_to_tensor normalizes to [0, 1]") {
  GrayImage img(2, 1);
  img.data = {0, 255};
  auto t = image_to_tensor(img);
  REQUIRE(t.shape == std::vector<int>{1, 2, 1});
  CHECK(t.data[0] == 0.0f);
  CHECK(t.data[1] == 1.0f);
}

TEST_CASE("to_input_tensor enforces 128x128") {
  GrayImage ok(128, 128, 128);
  auto t = to_input_tensor(ok);
  CHECK(t.shape == std::vector<int>{128, 128, 1});
  CHECK(t.data[0] == doctest::Approx(128.0f / 255.0f));
  GrayImage bad(64, 128);
  CHECK_THROWS_AS(to_input_tensor(bad), std::invalid_argument);
}
