#include "tunnelpilot/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "tunnelpilot/layers.hpp"
#include "tunnelpilot/rng.hpp"

namespace tp {

std::vector<LayerSpec> default_architecture() {
  return {
      LayerSpec::conv(3, 32), LayerSpec::relu(), LayerSpec::maxpool(),
      LayerSpec::conv(3, 32), LayerSpec::relu(), LayerSpec::maxpool(),
      LayerSpec::conv(3, 64), LayerSpec::relu(), LayerSpec::maxpool(),
      LayerSpec::flatten(),   LayerSpec::dense(64), LayerSpec::relu(),
      LayerSpec::dense(kNumClasses), LayerSpec::softmax(),
  };
}

std::vector<std::vector<int>> infer_shapes(const std::vector<LayerSpec>& layers,
                                           int in_h, int in_w, int in_c) {
  if (in_h <= 0 || in_w <= 0 || in_c <= 0)
    throw std::invalid_argument("model: input dimensions must be positive");
  if (layers.empty()) throw std::invalid_argument("model: empty layer stack");

  std::vector<std::vector<int>> shapes;
  std::vector<int> cur = {in_h, in_w, in_c};
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::Conv2d:
        if (cur.size() != 3)
          throw std::invalid_argument("model: conv2d needs a rank-3 input");
        if (l.kernel <= 0 || l.kernel % 2 == 0)
          throw std::invalid_argument("model: conv kernel must be odd and positive");
        if (l.filters <= 0)
          throw std::invalid_argument("model: conv filter count must be positive");
        cur = {cur[0], cur[1], l.filters};
        break;
      case LayerKind::MaxPool2:
        if (cur.size() != 3)
          throw std::invalid_argument("model: maxpool needs a rank-3 input");
        if (cur[0] % 2 != 0 || cur[1] % 2 != 0)
          throw std::invalid_argument("model: maxpool needs even spatial extents");
        cur = {cur[0] / 2, cur[1] / 2, cur[2]};
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::Flatten: {
        size_t n = 1;
        for (int e : cur) n *= static_cast<size_t>(e);
        cur = {static_cast<int>(n)};
        break;
      }
      case LayerKind::Dense:
        if (cur.size() != 1)
          throw std::invalid_argument("model: dense needs a flattened input");
        if (l.units <= 0)
          throw std::invalid_argument("model: dense unit count must be positive");
        cur = {l.units};
        break;
      case LayerKind::Softmax:
        if (cur.size() != 1)
          throw std::invalid_argument("model: softmax needs a flattened input");
        if (i + 1 != layers.size())
          throw std::invalid_argument("model: softmax must be the final layer");
        break;
      default:
        throw std::invalid_argument("model: unknown layer kind");
    }
    shapes.push_back(cur);
  }
  if (layers.back().kind != LayerKind::Softmax)
    throw std::invalid_argument("model: stack must end in softmax");
  if (shapes.back() != std::vector<int>{kNumClasses})
    throw std::invalid_argument("model: final layer must emit one value per class");
  return shapes;
}

CnnModel init_model(const std::vector<LayerSpec>& layers, int in_h, int in_w,
                    int in_c, uint64_t seed) {
  auto shapes = infer_shapes(layers, in_h, in_w, in_c);
  CnnModel m;
  m.input_h = in_h;
  m.input_w = in_w;
  m.input_c = in_c;
  m.rng_seed = seed;
  m.layers = layers;
  m.params.resize(layers.size());

  Rng rng(mix_seed(seed));
  std::vector<int> cur = {in_h, in_w, in_c};
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.kind == LayerKind::Conv2d) {
      int fan_in = l.kernel * l.kernel * cur[2];
      double limit = std::sqrt(6.0 / fan_in);
      LayerParams& p = m.params[i];
      p.weights = Tensor({l.kernel, l.kernel, cur[2], l.filters});
      for (auto& w : p.weights.data)
        w = static_cast<float>(rng.uniform(-limit, limit));
      p.bias = Tensor({l.filters});
    } else if (l.kind == LayerKind::Dense) {
      int fan_in = cur[0];
      double limit = std::sqrt(6.0 / fan_in);
      LayerParams& p = m.params[i];
      p.weights = Tensor({fan_in, l.units});
      for (auto& w : p.weights.data)
        w = static_cast<float>(rng.uniform(-limit, limit));
      p.bias = Tensor({l.units});
    }
    cur = shapes[i];
  }
  return m;
}

Tensor model_forward(const CnnModel& model, const Tensor& input,
                     ForwardCache* cache) {
  if (input.shape != std::vector<int>{model.input_h, model.input_w, model.input_c})
    throw std::invalid_argument("model: input tensor shape does not match model input");
  if (model.params.size() != model.layers.size())
    throw std::invalid_argument("model: parameter table does not match layer stack");

  if (cache) {
    cache->acts.clear();
    cache->pool_argmax.assign(model.layers.size(), {});
    cache->acts.push_back(input);
  }

  Tensor cur = input;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    switch (l.kind) {
      case LayerKind::Conv2d:
        cur = conv2d_forward(cur, model.params[i].weights, model.params[i].bias);
        break;
      case LayerKind::MaxPool2: {
        auto r = maxpool2_forward(cur);
        cur = std::move(r.out);
        if (cache) cache->pool_argmax[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::Relu:
        cur = relu_forward(cur);
        break;
      case LayerKind::Flatten:
        cur.shape = {static_cast<int>(cur.numel())};
        break;
      case LayerKind::Dense:
        cur = dense_forward(cur, model.params[i].weights, model.params[i].bias);
        break;
      case LayerKind::Softmax:
        cur = softmax(cur);
        break;
    }
    if (cache) cache->acts.push_back(cur);
  }
  return cur;
}

std::vector<LayerParams> make_grad_accum(const CnnModel& model) {
  std::vector<LayerParams> g(model.params.size());
  for (size_t i = 0; i < model.params.size(); ++i) {
    if (!model.params[i].empty()) {
      g[i].weights = Tensor(model.params[i].weights.shape);
      g[i].bias = Tensor(model.params[i].bias.shape);
    }
  }
  return g;
}

void zero_grads(std::vector<LayerParams>& grads) {
  for (auto& g : grads) {
    if (!g.empty()) {
      g.weights.fill(0.0f);
      g.bias.fill(0.0f);
    }
  }
}

float model_backward(const CnnModel& model, const ForwardCache& cache,
                     ClassLabel target, std::vector<LayerParams>& grad_accum) {
  if (cache.acts.size() != model.layers.size() + 1)
    throw std::invalid_argument("model: forward cache does not match layer stack");
  if (grad_accum.size() != model.params.size())
    throw std::invalid_argument("model: gradient accumulator does not match model");

  const Tensor& probs = cache.acts.back();
  auto ce = cross_entropy(probs, target);
  Tensor g = std::move(ce.grad_logits);  // gradient w.r.t. the softmax input

  for (size_t ri = model.layers.size(); ri-- > 0;) {
    const LayerSpec& l = model.layers[ri];
    const Tensor& in_act = cache.acts[ri];
    switch (l.kind) {
      case LayerKind::Softmax:
        break;  // folded into the cross-entropy gradient
      case LayerKind::Conv2d: {
        auto cg = conv2d_backward(g, in_act, model.params[ri].weights);
        for (size_t j = 0; j < cg.weights.numel(); ++j)
          grad_accum[ri].weights.data[j] += cg.weights.data[j];
        for (size_t j = 0; j < cg.bias.numel(); ++j)
          grad_accum[ri].bias.data[j] += cg.bias.data[j];
        g = std::move(cg.input);
        break;
      }
      case LayerKind::Dense: {
        auto dg = dense_backward(g, in_act, model.params[ri].weights);
        for (size_t j = 0; j < dg.weights.numel(); ++j)
          grad_accum[ri].weights.data[j] += dg.weights.data[j];
        for (size_t j = 0; j < dg.bias.numel(); ++j)
          grad_accum[ri].bias.data[j] += dg.bias.data[j];
        g = std::move(dg.input);
        break;
      }
      case LayerKind::MaxPool2:
        g = maxpool2_backward(g, cache.pool_argmax[ri], in_act.shape);
        break;
      case LayerKind::Relu:
        // in place: the upstream gradient tensor is not needed afterwards
        for (size_t j = 0; j < g.numel(); ++j)
          if (in_act.data[j] <= 0.0f) g.data[j] = 0.0f;
        break;
      case LayerKind::Flatten:
        g.shape = in_act.shape;
        break;
    }
  }
  return ce.loss;
}

Prediction predict(const CnnModel& model, const GrayImage& img) {
  if (img.width != model.input_w || img.height != model.input_h)
    throw std::invalid_argument("predict: image is " + std::to_string(img.width) +
                                "x" + std::to_string(img.height) + ", model wants " +
                                std::to_string(model.input_w) + "x" +
                                std::to_string(model.input_h));
  Tensor probs = model_forward(model, image_to_tensor(img));
  Prediction p{};
  int best = 0;
  for (int i = 0; i < kNumClasses; ++i) {
    p.probabilities[i] = probs.data[i];
    if (probs.data[i] > probs.data[best]) best = i;  // strict >: ties keep lowest index
  }
  p.label = static_cast<ClassLabel>(best);
  return p;
}

namespace {

constexpr char kMagic[6] = {'T', 'P', 'C', 'N', 'N', '1'};
constexpr uint16_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_f32(std::vector<uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<uint32_t>(v));
}

struct Reader {
  const std::vector<uint8_t>& b;
  size_t pos = 0;
  void need(size_t n) const {
    if (pos + n > b.size()) throw std::runtime_error("model file: truncated");
  }
  uint8_t u8() {
    need(1);
    return b[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(b[pos] | (b[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
};

void put_tensor(std::vector<uint8_t>& out, const Tensor& t) {
  out.push_back(static_cast<uint8_t>(t.shape.size()));
  for (int e : t.shape) put_u32(out, static_cast<uint32_t>(e));
  for (float v : t.data) put_f32(out, v);
}

Tensor read_tensor(Reader& r) {
  int rank = r.u8();
  if (rank < 1 || rank > 4) throw std::runtime_error("model file: shape mismatch (bad tensor rank)");
  std::vector<int> shape(rank);
  size_t n = 1;
  for (int i = 0; i < rank; ++i) {
    uint32_t e = r.u32();
    if (e == 0 || e > (1u << 24)) throw std::runtime_error("model file: shape mismatch (bad extent)");
    shape[i] = static_cast<int>(e);
    n *= e;
  }
  Tensor t(shape);
  r.need(n * 4);
  for (size_t i = 0; i < n; ++i) t.data[i] = r.f32();
  return t;
}

}  // namespace

std::vector<uint8_t> save_model_bytes(const CnnModel& model) {
  if (model.params.size() != model.layers.size())
    throw std::invalid_argument("model: parameter table does not match layer stack");
  std::vector<uint8_t> out(kMagic, kMagic + sizeof(kMagic));
  put_u16(out, kVersion);
  put_u64(out, model.rng_seed);
  put_u32(out, static_cast<uint32_t>(model.input_h));
  put_u32(out, static_cast<uint32_t>(model.input_w));
  put_u32(out, static_cast<uint32_t>(model.input_c));
  put_u32(out, static_cast<uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    out.push_back(static_cast<uint8_t>(l.kind));
    put_u32(out, static_cast<uint32_t>(l.kernel));
    put_u32(out, static_cast<uint32_t>(l.filters));
    put_u32(out, static_cast<uint32_t>(l.units));
  }
  for (size_t i = 0; i < model.layers.size(); ++i) {
    if (model.params[i].empty()) continue;
    put_tensor(out, model.params[i].weights);
    put_tensor(out, model.params[i].bias);
  }
  return out;
}

CnnModel load_model_bytes(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("model file: bad magic");
  Reader r{bytes, sizeof(kMagic)};
  uint16_t version = r.u16();
  if (version != kVersion)
    throw std::runtime_error("model file: unsupported version " + std::to_string(version));

  CnnModel m;
  m.rng_seed = r.u64();
  m.input_h = static_cast<int>(r.u32());
  m.input_w = static_cast<int>(r.u32());
  m.input_c = static_cast<int>(r.u32());
  uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 256) throw std::runtime_error("model file: shape mismatch (bad layer count)");
  m.layers.resize(n_layers);
  for (auto& l : m.layers) {
    uint8_t kind = r.u8();
    if (kind > static_cast<uint8_t>(LayerKind::Softmax))
      throw std::runtime_error("model file: shape mismatch (unknown layer kind)");
    l.kind = static_cast<LayerKind>(kind);
    l.kernel = static_cast<int>(r.u32());
    l.filters = static_cast<int>(r.u32());
    l.units = static_cast<int>(r.u32());
  }

  // validates the stack itself and gives the expected parameter shapes
  auto shapes = infer_shapes(m.layers, m.input_h, m.input_w, m.input_c);
  m.params.resize(n_layers);
  std::vector<int> cur = {m.input_h, m.input_w, m.input_c};
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& l = m.layers[i];
    if (l.kind == LayerKind::Conv2d) {
      m.params[i].weights = read_tensor(r);
      m.params[i].bias = read_tensor(r);
      if (m.params[i].weights.shape != std::vector<int>{l.kernel, l.kernel, cur[2], l.filters} ||
          m.params[i].bias.shape != std::vector<int>{l.filters})
        throw std::runtime_error("model file: shape mismatch (conv parameters)");
    } else if (l.kind == LayerKind::Dense) {
      m.params[i].weights = read_tensor(r);
      m.params[i].bias = read_tensor(r);
      if (m.params[i].weights.shape != std::vector<int>{cur[0], l.units} ||
          m.params[i].bias.shape != std::vector<int>{l.units})
        throw std::runtime_error("model file: shape mismatch (dense parameters)");
    }
    cur = shapes[i];
  }
  if (r.pos != bytes.size()) throw std::runtime_error("model file: trailing data");
  return m;
}

void save_model(const CnnModel& model, const std::filesystem::path& path) {
  auto bytes = save_model_bytes(model);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("model file: cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("model file: write failed for " + path.string());
}

CnnModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("model file: cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return load_model_bytes(bytes);
}

}  // namespace tp
