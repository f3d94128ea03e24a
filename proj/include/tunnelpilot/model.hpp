#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tunnelpilot/image.hpp"
#include "tunnelpilot/label.hpp"
#include "tunnelpilot/tensor.hpp"

namespace tp {

enum class LayerKind : uint8_t {
  Conv2d = 0,
  MaxPool2 = 1,
  Relu = 2,
  Flatten = 3,
  Dense = 4,
  Softmax = 5,
};

struct LayerSpec {
  LayerKind kind;
  int kernel = 0;   // Conv2d
  int filters = 0;  // Conv2d
  int units = 0;    // Dense

  static LayerSpec conv(int kernel, int filters) {
    return {LayerKind::Conv2d, kernel, filters, 0};
  }
  static LayerSpec maxpool() { return {LayerKind::MaxPool2, 0, 0, 0}; }
  static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0, 0}; }
  static LayerSpec dense(int units) { return {LayerKind::Dense, 0, 0, units}; }
  static LayerSpec softmax() { return {LayerKind::Softmax, 0, 0, 0}; }
};

struct LayerParams {
  Tensor weights, bias;
  bool empty() const { return weights.numel() == 0; }
};

struct CnnModel {
  int input_h = 128, input_w = 128, input_c = 1;
  uint64_t rng_seed = 0;
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> params;  // aligned with layers; empty for stateless ones
};

// The classifier stack: three conv/pool blocks into a small head.
std::vector<LayerSpec> default_architecture();

// Output shape of every layer given the input shape. Throws on inconsistent
// stacks (odd extents into maxpool, dense on rank>1 input, softmax not last,
// final output not kNumClasses wide).
std::vector<std::vector<int>> infer_shapes(const std::vector<LayerSpec>& layers,
                                           int in_h, int in_w, int in_c);

// He-uniform weights (limit sqrt(6/fan_in)), zero biases, all draws from one
// seeded stream in layer order.
CnnModel init_model(const std::vector<LayerSpec>& layers, int in_h, int in_w,
                    int in_c, uint64_t seed);

struct ForwardCache {
  std::vector<Tensor> acts;                      // acts[0] = input, acts[i+1] = layer i output
  std::vector<std::vector<int32_t>> pool_argmax; // aligned with layers
};

// Runs the stack; returns class probabilities. Pass a cache to keep the
// activations backward() needs.
Tensor model_forward(const CnnModel& model, const Tensor& input,
                     ForwardCache* cache = nullptr);

// Backprop from the fused softmax/cross-entropy gradient. Adds this sample's
// parameter gradients into grad_accum (aligned with model.params) and returns
// the sample loss.
float model_backward(const CnnModel& model, const ForwardCache& cache,
                     ClassLabel target, std::vector<LayerParams>& grad_accum);

std::vector<LayerParams> make_grad_accum(const CnnModel& model);
void zero_grads(std::vector<LayerParams>& grads);

struct Prediction {
  ClassLabel label;
  std::array<float, kNumClasses> probabilities;
};

// Classify one frame. Image dimensions must match the model input; ties pick
// the lowest class index.
Prediction predict(const CnnModel& model, const GrayImage& img);

// Binary model container, magic "TPCNN1" + little-endian payload.
std::vector<uint8_t> save_model_bytes(const CnnModel& model);
CnnModel load_model_bytes(const std::vector<uint8_t>& bytes);
void save_model(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_model(const std::filesystem::path& path);

}  // namespace tp
