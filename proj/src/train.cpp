#include "tunnelpilot/train.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "tunnelpilot/adam.hpp"
#include "tunnelpilot/layers.hpp"
#include "tunnelpilot/rng.hpp"

namespace tp {

namespace {

// Cycles a shuffled index stream; reshuffles whenever the pass ends.
struct SampleStream {
  std::vector<size_t> order;
  size_t pos = 0;
  Rng rng;

  SampleStream(size_t n, uint64_t seed) : rng(seed) {
    order.resize(n);
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
  }
  size_t next() {
    if (pos == order.size()) {
      rng.shuffle(order);
      pos = 0;
    }
    return order[pos++];
  }
};

int argmax3(const Tensor& probs) {
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i)
    if (probs.data[i] > probs.data[best]) best = i;
  return best;
}

}  // namespace

double dataset_accuracy(const CnnModel& model, const std::vector<LabeledImage>& items) {
  if (items.empty()) throw std::invalid_argument("accuracy: empty dataset");
  size_t correct = 0;
  for (const auto& it : items)
    if (predict(model, it.image).label == it.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

TrainResult train(const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& holdout,
                  const TrainConfig& cfg) {
  return train(train_set, holdout, cfg, default_architecture());
}

TrainResult train(const std::vector<LabeledImage>& train_set,
                  const std::vector<LabeledImage>& holdout,
                  const TrainConfig& cfg, const std::vector<LayerSpec>& layers) {
  if (cfg.epochs <= 0 || cfg.steps_per_epoch <= 0)
    throw std::invalid_argument("train: epochs and steps_per_epoch must be positive");
  if (cfg.batch_size <= 0)
    throw std::invalid_argument("train: batch size must be positive");
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("train: learning rate must be positive");
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (static_cast<size_t>(cfg.batch_size) > train_set.size())
    throw std::invalid_argument("train: batch size exceeds training set size");
  size_t per_class[kNumClasses] = {};
  for (const auto& it : train_set) per_class[label_index(it.label)]++;
  for (ClassLabel l : kAllLabels)
    if (per_class[label_index(l)] == 0)
      throw std::invalid_argument(std::string("train: class '") + label_name(l) +
                                  "' has no training examples");

  const int in_h = train_set[0].image.height;
  const int in_w = train_set[0].image.width;
  for (const auto& it : train_set)
    if (it.image.width != in_w || it.image.height != in_h)
      throw std::invalid_argument("train: images must share one size");

  TrainResult res;
  res.model = init_model(layers, in_h, in_w, 1, cfg.seed);

  std::vector<AdamState> opt_w(res.model.layers.size());
  std::vector<AdamState> opt_b(res.model.layers.size());
  for (size_t i = 0; i < res.model.params.size(); ++i) {
    if (res.model.params[i].empty()) continue;
    opt_w[i] = AdamState(res.model.params[i].weights.shape);
    opt_b[i] = AdamState(res.model.params[i].bias.shape);
    opt_w[i].alpha = opt_b[i].alpha = cfg.learning_rate;
  }

  SampleStream stream(train_set.size(), mix_seed(cfg.seed ^ 0x5eedULL));
  auto grads = make_grad_accum(res.model);
  ForwardCache cache;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    size_t correct = 0, seen = 0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      zero_grads(grads);
      double batch_loss = 0.0;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const LabeledImage& item = train_set[stream.next()];
        Tensor input = image_to_tensor(item.image);
        Tensor probs = model_forward(res.model, input, &cache);
        if (argmax3(probs) == label_index(item.label)) ++correct;
        ++seen;
        batch_loss += model_backward(res.model, cache, item.label, grads);
      }
      batch_loss /= cfg.batch_size;
      if (epoch == 1 && step == 0) res.initial_loss = batch_loss;
      loss_sum += batch_loss;

      const float scale = 1.0f / static_cast<float>(cfg.batch_size);
      for (size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].empty()) continue;
        for (auto& v : grads[i].weights.data) v *= scale;
        for (auto& v : grads[i].bias.data) v *= scale;
        adam_step(res.model.params[i].weights, grads[i].weights, opt_w[i]);
        adam_step(res.model.params[i].bias, grads[i].bias, opt_b[i]);
      }
    }

    EpochStats st;
    st.epoch = epoch;
    st.mean_loss = loss_sum / cfg.steps_per_epoch;
    st.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    if (!holdout.empty()) st.holdout_accuracy = dataset_accuracy(res.model, holdout);
    res.history.push_back(st);
  }
  return res;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochStats>& history) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("history: cannot open " + path.string() + " for writing");
  f << "epoch,mean_loss,train_accuracy,holdout_accuracy\n";
  char buf[128];
  for (const auto& st : history) {
    if (st.holdout_accuracy) {
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", st.epoch, st.mean_loss,
                    st.train_accuracy, *st.holdout_accuracy);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,\n", st.epoch, st.mean_loss,
                    st.train_accuracy);
    }
    f << buf;
  }
  if (!f) throw std::runtime_error("history: write failed for " + path.string());
}

}  // namespace tp
