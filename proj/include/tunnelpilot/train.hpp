#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tunnelpilot/dataset.hpp"
#include "tunnelpilot/model.hpp"

namespace tp {

struct TrainConfig {
  int epochs = 25;
  int steps_per_epoch = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  uint64_t seed = 42;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> holdout_accuracy;
};

struct TrainResult {
  CnnModel model;
  std::vector<EpochStats> history;
  double initial_loss = 0.0;  // mean loss of the very first batch, pre-update
};

// Minibatch SGD with Adam on the default architecture. One seed drives weight
// init and the shuffle stream; identical inputs give bit-identical models.
// The shuffled dataset is cycled continuously across epochs. holdout may be
// empty (history then has no holdout column values).
TrainResult train(const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& holdout,
                  const TrainConfig& cfg);
TrainResult train(const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& holdout,
                  const TrainConfig& cfg, const std::vector<LayerSpec>& layers);

// Fraction of images whose predicted class matches the label.
double dataset_accuracy(const CnnModel& model, const std::vector<LabeledImage>& items);

// epoch,mean_loss,train_accuracy,holdout_accuracy (last column empty when the
// run had no holdout set)
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochStats>& history);

}  // namespace tp
