#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tunnelpilot/datagen.hpp"
#include "tunnelpilot/dataset.hpp"

using namespace tp;

namespace {

TunnelMap small_tunnel(double roughness = 0.0) {
  TunnelParams p;
  p.width = 6.0;
  p.height = 4.0;
  p.length = 40.0;
  p.arc_angle_deg = 0.0;
  p.roughness = roughness;
  return generate_tunnel(p);
}

DatasetGenConfig small_config() {
  DatasetGenConfig cfg;
  cfg.n_per_class = 4;
  cfg.camera.width = 16;
  cfg.camera.height = 16;
  cfg.illum.noise_sigma = 0.0;
  cfg.illum_min_mult = 1.0;
  cfg.illum_max_mult = 1.0;
  cfg.lateral_jitter = 0.0;
  cfg.vertical_jitter = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("each pose yields one view per class in label order") {
  auto map = small_tunnel();
  auto cfg = small_config();
  auto samples = generate_dataset(map, cfg);
  REQUIRE(samples.size() == 12);
  for (size_t i = 0; i < samples.size(); i += 3) {
    CHECK(samples[i].label == ClassLabel::Left);
    CHECK(samples[i + 1].label == ClassLabel::Center);
    CHECK(samples[i + 2].label == ClassLabel::Right);
    // the triplet shares its pose and lighting draw
    CHECK(samples[i].s == samples[i + 1].s);
    CHECK(samples[i].s == samples[i + 2].s);
    CHECK(samples[i].illum_mult == samples[i + 2].illum_mult);
  }
}

TEST_CASE("poses are evenly spaced inside the end margins") {
  auto map = small_tunnel();
  auto cfg = small_config();
  auto samples = generate_dataset(map, cfg);
  const double usable = 40.0 - 2 * cfg.s_margin;
  for (int i = 0; i < 4; ++i) {
    double expect = cfg.s_margin + usable * (i + 0.5) / 4.0;
    CHECK(samples[static_cast<size_t>(3 * i)].s ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  for (const auto& s : samples) {
    CHECK(s.s >= cfg.s_margin);
    CHECK(s.s <= 40.0 - cfg.s_margin);
  }
}

TEST_CASE("zero camera offset collapses the three views to one frame") {
  auto map = small_tunnel();
  auto cfg = small_config();
  cfg.camera_offset = 0.0;
  auto samples = generate_dataset(map, cfg);
  for (size_t i = 0; i < samples.size(); i += 3) {
    CHECK(samples[i].image.data == samples[i + 1].image.data);
    CHECK(samples[i + 1].image.data == samples[i + 2].image.data);
  }
}

TEST_CASE("left and right views mirror each other on a centered pose") {
  auto map = small_tunnel();
  auto cfg = small_config();  // no jitter, no noise, flat walls
  auto samples = generate_dataset(map, cfg);
  const int w = cfg.camera.width;
  for (size_t i = 0; i < samples.size(); i += 3) {
    const auto& left = samples[i].image;
    const auto& right = samples[i + 2].image;
    CHECK(left.data != samples[i + 1].image.data);  // offset views differ
    for (int y = 0; y < left.height; ++y)
      for (int x = 0; x < w; ++x)
        REQUIRE(left.at(x, y) == right.at(w - 1 - x, y));
  }
}

TEST_CASE("generation is deterministic per seed") {
  auto map = small_tunnel(0.15);
  auto cfg = small_config();
  cfg.lateral_jitter = 0.5;
  cfg.vertical_jitter = 0.1;
  cfg.illum_min_mult = 0.25;
  cfg.illum_max_mult = 2.0;
  cfg.illum.noise_sigma = 2.0;

  auto a = generate_dataset(map, cfg);
  auto b = generate_dataset(map, cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image.data == b[i].image.data);
    CHECK(a[i].illum_mult == b[i].illum_mult);
  }

  cfg.seed += 1;
  auto c = generate_dataset(map, cfg);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i)
    differs = differs || a[i].image.data != c[i].image.data;
  CHECK(differs);
}

TEST_CASE("illumination multipliers stay inside the configured range") {
  auto map = small_tunnel();
  auto cfg = small_config();
  cfg.n_per_class = 30;
  cfg.illum_min_mult = 0.25;
  cfg.illum_max_mult = 2.0;
  auto samples = generate_dataset(map, cfg);
  bool spread = false;
  for (const auto& s : samples) {
    CHECK(s.illum_mult >= 0.25);
    CHECK(s.illum_mult <= 2.0);
    spread = spread || s.illum_mult < 0.9 || s.illum_mult > 1.1;
  }
  CHECK(spread);
}

TEST_CASE("excess lateral jitter is clamped away from the walls") {
  auto map = small_tunnel(0.15);
  auto cfg = small_config();
  cfg.lateral_jitter = 50.0;  // absurd request; generation must still succeed
  cfg.n_per_class = 8;
  auto samples = generate_dataset(map, cfg);
  CHECK(samples.size() == 24);
}

TEST_CASE("generation validates its configuration") {
  auto map = small_tunnel();
  auto cfg = small_config();

  cfg.n_per_class = 0;
  CHECK_THROWS_AS(generate_dataset(map, cfg), std::invalid_argument);

  cfg = small_config();
  cfg.camera_offset = 2.0;  // > pi/2
  CHECK_THROWS_AS(generate_dataset(map, cfg), std::invalid_argument);
  cfg.camera_offset = -0.1;
  CHECK_THROWS_AS(generate_dataset(map, cfg), std::invalid_argument);

  cfg = small_config();
  cfg.illum_min_mult = 0.0;
  CHECK_THROWS_AS(generate_dataset(map, cfg), std::invalid_argument);
  cfg.illum_min_mult = 2.0;
  cfg.illum_max_mult = 1.0;
  CHECK_THROWS_AS(generate_dataset(map, cfg), std::invalid_argument);

  cfg = small_config();
  cfg.s_margin = 25.0;  // nothing left of a 40 m tunnel
  CHECK_THROWS_AS(generate_dataset(map, cfg), std::invalid_argument);
}

TEST_CASE("written datasets load back with stable order and labels") {
  namespace fs = std::filesystem;
  auto map = small_tunnel();
  auto cfg = small_config();
  auto samples = generate_dataset(map, cfg);

  auto root = fs::temp_directory_path() / "tp_dataset_test";
  fs::remove_all(root);
  write_dataset(root, samples);

  for (const char* cls : {"left", "center", "right"})
    for (const char* name : {"00000.pgm", "00003.pgm"})
      CHECK(fs::exists(root / cls / name));

  std::ifstream meta(root / "metadata.csv");
  REQUIRE(meta.good());
  std::string line;
  std::getline(meta, line);
  CHECK(line == "file,label,s,illum_mult");
  size_t rows = 0;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    ++rows;
  }
  CHECK(rows == samples.size());

  auto loaded = load_labeled_dataset(root);
  REQUIRE(loaded.size() == samples.size());
  // loader groups left, then center, then right, each in filename order
  for (int i = 0; i < 4; ++i) {
    CHECK(loaded[i].label == ClassLabel::Left);
    CHECK(loaded[i].image.data == samples[static_cast<size_t>(3 * i)].image.data);
    CHECK(loaded[4 + i].label == ClassLabel::Center);
    CHECK(loaded[8 + i].label == ClassLabel::Right);
  }

  fs::remove_all(root);
}

TEST_CASE("dataset writer and loader reject bad inputs") {
  namespace fs = std::filesystem;
  CHECK_THROWS_AS(write_dataset(fs::temp_directory_path() / "tp_x", {}),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_labeled_dataset("/nonexistent/tp_dataset"),
                       doctest::Contains("directory not found"), std::runtime_error);

  // class directory exists but holds no frames
  auto root = fs::temp_directory_path() / "tp_dataset_empty";
  fs::remove_all(root);
  for (const char* cls : {"left", "center", "right"})
    fs::create_directories(root / cls);
  CHECK_THROWS_WITH_AS(load_labeled_dataset(root), doctest::Contains("no .pgm"),
                       std::runtime_error);
  fs::remove_all(root);
}
