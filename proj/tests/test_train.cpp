#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tunnelpilot/rng.hpp"
#include "tunnelpilot/train.hpp"

using namespace tp;

namespace {

// trivially separable 8x8 set: the bright half of the frame encodes the class
LabeledImage make_item(ClassLabel label, Rng& rng) {
  LabeledImage it;
  it.label = label;
  it.image.width = 8;
  it.image.height = 8;
  it.image.data.assign(64, 0);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      int base;
      switch (label) {
        case ClassLabel::Left: base = x < 4 ? 220 : 30; break;
        case ClassLabel::Right: base = x >= 4 ? 220 : 30; break;
        default: base = 120; break;
      }
      int noisy = base + static_cast<int>(rng.uniform(-20.0, 20.0));
      it.image.data[static_cast<size_t>(y) * 8 + x] =
          static_cast<uint8_t>(std::clamp(noisy, 0, 255));
    }
  return it;
}

std::vector<LabeledImage> make_set(int per_class, uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledImage> items;
  for (ClassLabel l : kAllLabels)
    for (int i = 0; i < per_class; ++i) items.push_back(make_item(l, rng));
  return items;
}

std::vector<LayerSpec> head_only() {
  return {LayerSpec::flatten(), LayerSpec::dense(16), LayerSpec::relu(),
          LayerSpec::dense(3), LayerSpec::softmax()};
}

TrainConfig quick_config(uint64_t seed = 42) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.steps_per_epoch = 10;
  cfg.batch_size = 6;
  cfg.learning_rate = 1e-2;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("separable toy set reaches full holdout accuracy within 3 epochs") {
  auto train_set = make_set(20, 1);
  auto holdout = make_set(5, 2);
  auto res = train(train_set, holdout, quick_config(), head_only());

  REQUIRE(res.history.size() == 3);
  REQUIRE(res.history.back().holdout_accuracy.has_value());
  CHECK(*res.history.back().holdout_accuracy == 1.0);

  // first batch scored before any update: close to the 3-class chance level
  CHECK(res.initial_loss > 0.8);
  CHECK(res.initial_loss < 1.4);
  CHECK(res.history.front().mean_loss < res.initial_loss);
  CHECK(res.history.back().mean_loss < res.history.front().mean_loss);
  for (int i = 0; i < 3; ++i) CHECK(res.history[i].epoch == i + 1);
}

TEST_CASE("identical configuration trains a bit-identical model") {
  auto train_set = make_set(8, 3);
  auto res1 = train(train_set, {}, quick_config(7), head_only());
  auto res2 = train(train_set, {}, quick_config(7), head_only());
  CHECK(save_model_bytes(res1.model) == save_model_bytes(res2.model));
  REQUIRE(res1.history.size() == res2.history.size());
  for (size_t i = 0; i < res1.history.size(); ++i)
    CHECK(res1.history[i].mean_loss == res2.history[i].mean_loss);

  auto res3 = train(train_set, {}, quick_config(8), head_only());
  CHECK(save_model_bytes(res1.model) != save_model_bytes(res3.model));
}

TEST_CASE("training without a holdout leaves the column empty") {
  auto train_set = make_set(8, 4);
  auto res = train(train_set, {}, quick_config(), head_only());
  for (const auto& st : res.history) CHECK_FALSE(st.holdout_accuracy.has_value());
}

TEST_CASE("invalid configurations and datasets are rejected") {
  auto good = make_set(4, 5);
  auto cfg = quick_config();

  CHECK_THROWS_AS(train({}, {}, cfg, head_only()), std::invalid_argument);

  TrainConfig bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(good, {}, bad, head_only()), std::invalid_argument);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(good, {}, bad, head_only()), std::invalid_argument);
  bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(good, {}, bad, head_only()), std::invalid_argument);
  bad = cfg;
  bad.batch_size = static_cast<int>(good.size()) + 1;
  CHECK_THROWS_AS(train(good, {}, bad, head_only()), std::invalid_argument);

  // a class with no examples
  std::vector<LabeledImage> two_class;
  Rng rng(6);
  for (int i = 0; i < 6; ++i) two_class.push_back(make_item(ClassLabel::Left, rng));
  for (int i = 0; i < 6; ++i) two_class.push_back(make_item(ClassLabel::Center, rng));
  cfg.batch_size = 4;
  CHECK_THROWS_WITH_AS(train(two_class, {}, cfg, head_only()),
                       doctest::Contains("has no training examples"),
                       std::invalid_argument);

  // mixed image sizes
  auto mixed = make_set(4, 7);
  mixed.back().image.width = 4;
  mixed.back().image.height = 16;
  CHECK_THROWS_WITH_AS(train(mixed, {}, cfg, head_only()),
                       doctest::Contains("share one size"), std::invalid_argument);
}

TEST_CASE("dataset_accuracy counts exact label matches") {
  // zero weights -> uniform probabilities -> tie resolves to Left
  auto model = init_model(head_only(), 8, 8, 1, 1);
  for (auto& p : model.params) {
    std::fill(p.weights.data.begin(), p.weights.data.end(), 0.0f);
    std::fill(p.bias.data.begin(), p.bias.data.end(), 0.0f);
  }
  Rng rng(8);
  std::vector<LabeledImage> items = {
      make_item(ClassLabel::Left, rng), make_item(ClassLabel::Left, rng),
      make_item(ClassLabel::Center, rng), make_item(ClassLabel::Right, rng)};
  CHECK(dataset_accuracy(model, items) == doctest::Approx(0.5));
  CHECK_THROWS_AS(dataset_accuracy(model, {}), std::invalid_argument);
}

TEST_CASE("history csv has one row per epoch and a trailing empty holdout field") {
  namespace fs = std::filesystem;
  std::vector<EpochStats> hist(2);
  hist[0].epoch = 1;
  hist[0].mean_loss = 1.5;
  hist[0].train_accuracy = 0.5;
  hist[0].holdout_accuracy = 0.75;
  hist[1].epoch = 2;
  hist[1].mean_loss = 0.25;
  hist[1].train_accuracy = 1.0;

  auto path = fs::temp_directory_path() / "tp_history_test.csv";
  write_history_csv(path, hist);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() ==
        "epoch,mean_loss,train_accuracy,holdout_accuracy\n"
        "1,1.5,0.5,0.75\n"
        "2,0.25,1,\n");
  fs::remove(path);

  CHECK_THROWS_AS(write_history_csv("/nonexistent/dir/h.csv", hist),
                  std::runtime_error);
}
