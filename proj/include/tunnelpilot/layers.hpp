#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "tunnelpilot/label.hpp"
#include "tunnelpilot/tensor.hpp"

namespace tp {

namespace detail {

#if defined(__GNUC__) || defined(__clang__)
#define TP_GEMM_VECTOR 1
// 64-byte lanes (16 floats / 8 doubles); may_alias permits loads through
// plain element pointers, aligned(alignof) keeps them unaligned-safe.
template <typename T>
struct GemmVec;
template <>
struct GemmVec<float> {
  using V = float __attribute__((vector_size(64), may_alias, aligned(4)));
  static constexpr int lanes = 16;
};
template <>
struct GemmVec<double> {
  using V = double __attribute__((vector_size(64), may_alias, aligned(8)));
  static constexpr int lanes = 8;
};
#endif

// Scalar panel for the leftover columns [j0, n); also the only path on
// compilers without the vector extension.
template <bool Acc, typename T>
void gemm_scalar_panel(const T* a, const T* b, T* c, int m, int k, int n,
                       int j0) {
  int nb = n - j0;
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    T* crow = c + static_cast<size_t>(i) * n + j0;
    if constexpr (!Acc) std::fill(crow, crow + nb, T(0));
    for (int p = 0; p < k; ++p) {
      T av = arow[p];
      const T* brow = b + static_cast<size_t>(p) * n + j0;
      for (int j = 0; j < nb; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,N] = (+=) A[M,K] * B[K,N], all row-major. Hand-vectorized 4x(2*lanes)
// micro-kernel: gcc 11 refuses to auto-vectorize this loop nest ("multiple
// nested loops"), so the panels are written with vector-extension types
// directly. N is a filter/unit count here (a multiple of 32 on every conv
// path), K a receptive-field size, M a pixel count.
template <bool Acc, typename T>
void gemm_impl(const T* a, const T* b, T* c, int m, int k, int n) {
#ifdef TP_GEMM_VECTOR
  if constexpr (std::is_same_v<T, float> || std::is_same_v<T, double>) {
    using V = typename GemmVec<T>::V;
    constexpr int L = GemmVec<T>::lanes;
    constexpr int NR = 2 * L;
    const size_t sk = static_cast<size_t>(k);
    const size_t sn = static_cast<size_t>(n);
    auto store = [](T* dst, V acc) {
      V* out = reinterpret_cast<V*>(dst);
      if constexpr (Acc)
        *out += acc;
      else
        *out = acc;
    };
    int j0 = 0;
    for (; j0 + NR <= n; j0 += NR) {
      int i = 0;
      for (; i + 4 <= m; i += 4) {
        V c00{}, c01{}, c10{}, c11{}, c20{}, c21{}, c30{}, c31{};
        const T* a0 = a + static_cast<size_t>(i) * sk;
        const T* bp = b + j0;
        for (int p = 0; p < k; ++p, bp += sn) {
          V b0 = *reinterpret_cast<const V*>(bp);
          V b1 = *reinterpret_cast<const V*>(bp + L);
          V av0 = V{} + a0[p];
          V av1 = V{} + a0[sk + p];
          V av2 = V{} + a0[2 * sk + p];
          V av3 = V{} + a0[3 * sk + p];
          c00 += av0 * b0;
          c01 += av0 * b1;
          c10 += av1 * b0;
          c11 += av1 * b1;
          c20 += av2 * b0;
          c21 += av2 * b1;
          c30 += av3 * b0;
          c31 += av3 * b1;
        }
        T* crow = c + static_cast<size_t>(i) * sn + j0;
        store(crow, c00);
        store(crow + L, c01);
        store(crow + sn, c10);
        store(crow + sn + L, c11);
        store(crow + 2 * sn, c20);
        store(crow + 2 * sn + L, c21);
        store(crow + 3 * sn, c30);
        store(crow + 3 * sn + L, c31);
      }
      for (; i < m; ++i) {
        V c0{}, c1{};
        const T* a0 = a + static_cast<size_t>(i) * sk;
        const T* bp = b + j0;
        for (int p = 0; p < k; ++p, bp += sn) {
          V av = V{} + a0[p];
          c0 += av * *reinterpret_cast<const V*>(bp);
          c1 += av * *reinterpret_cast<const V*>(bp + L);
        }
        T* crow = c + static_cast<size_t>(i) * sn + j0;
        store(crow, c0);
        store(crow + L, c1);
      }
    }
    for (; j0 + L <= n; j0 += L) {
      for (int i = 0; i < m; ++i) {
        V c0{};
        const T* a0 = a + static_cast<size_t>(i) * sk;
        const T* bp = b + j0;
        for (int p = 0; p < k; ++p, bp += sn)
          c0 += (V{} + a0[p]) * *reinterpret_cast<const V*>(bp);
        store(c + static_cast<size_t>(i) * sn + j0, c0);
      }
    }
    if (j0 < n) gemm_scalar_panel<Acc>(a, b, c, m, k, n, j0);
    return;
  }
#endif
  gemm_scalar_panel<Acc>(a, b, c, m, k, n, 0);
}

}  // namespace detail

template <typename T>
void gemm_accum(const T* a, const T* b, T* c, int m, int k, int n) {
  detail::gemm_impl<true>(a, b, c, m, k, n);
}

template <typename T>
void gemm_write(const T* a, const T* b, T* c, int m, int k, int n) {
  detail::gemm_impl<false>(a, b, c, m, k, n);
}

namespace detail {

// Reused im2col buffer. The zero cells come only from padding and sit at
// fixed offsets for a given geometry, so a buffer zeroed once stays valid
// across calls: the copy loops below overwrite exactly the non-pad cells.
template <typename T>
struct ColBuf {
  std::vector<T> data;
  int h = -1, w = -1, ch = -1, k = -1;

  void prepare(int h_, int w_, int ch_, int k_) {
    if (h == h_ && w == w_ && ch == ch_ && k == k_) return;
    h = h_;
    w = w_;
    ch = ch_;
    k = k_;
    data.assign(static_cast<size_t>(h) * w * k * k * ch, T(0));
  }
};

// Unfolds (H,W,C) into (H*W, k*k*C) patch rows with zero padding (same-size
// output). Channel-last layout makes each (ky,kx) cell a contiguous C-run.
template <typename T>
void im2col_same(const TensorT<T>& in, int k, ColBuf<T>& colbuf) {
  const int h = in.shape[0], w = in.shape[1], ch = in.shape[2];
  const int pad = k / 2;
  const size_t kk = static_cast<size_t>(k) * k * ch;
  colbuf.prepare(h, w, ch, k);
  std::vector<T>& cols = colbuf.data;
  for (int y = 0; y < h; ++y) {
    for (int ky = 0; ky < k; ++ky) {
      int sy = y + ky - pad;
      if (sy < 0 || sy >= h) continue;
      const T* srow = &in.data[static_cast<size_t>(sy) * w * ch];
      for (int x = 0; x < w; ++x) {
        T* dst = &cols[(static_cast<size_t>(y) * w + x) * kk +
                       static_cast<size_t>(ky) * k * ch];
        int kx0 = std::max(0, pad - x);
        int kx1 = std::min(k, w + pad - x);
        const T* src = srow + static_cast<size_t>(x + kx0 - pad) * ch;
        std::copy(src, src + static_cast<size_t>(kx1 - kx0) * ch,
                  dst + static_cast<size_t>(kx0) * ch);
      }
    }
  }
}

// Scatter-adds (H*W, k*k*C) patch-row gradients back onto the input grid.
template <typename T>
void col2im_add(const std::vector<T>& cols, int h, int w, int ch, int k,
                TensorT<T>& grad_in) {
  const int pad = k / 2;
  const size_t kk = static_cast<size_t>(k) * k * ch;
  for (int y = 0; y < h; ++y) {
    for (int ky = 0; ky < k; ++ky) {
      int sy = y + ky - pad;
      if (sy < 0 || sy >= h) continue;
      T* drow = &grad_in.data[static_cast<size_t>(sy) * w * ch];
      for (int x = 0; x < w; ++x) {
        const T* src = &cols[(static_cast<size_t>(y) * w + x) * kk +
                             static_cast<size_t>(ky) * k * ch];
        int kx0 = std::max(0, pad - x);
        int kx1 = std::min(k, w + pad - x);
        T* dst = drow + static_cast<size_t>(x + kx0 - pad) * ch;
        for (size_t t = 0; t < static_cast<size_t>(kx1 - kx0) * ch; ++t)
          dst[t] += src[static_cast<size_t>(kx0) * ch + t];
      }
    }
  }
}

// One buffer per conv geometry so interleaved layers keep their pad zeros.
template <typename T>
ColBuf<T>& conv_scratch(int h, int w, int ch, int k) {
  thread_local std::vector<std::unique_ptr<ColBuf<T>>> bufs;
  for (auto& b : bufs)
    if (b->h == h && b->w == w && b->ch == ch && b->k == k) return *b;
  bufs.push_back(std::make_unique<ColBuf<T>>());
  return *bufs.back();
}

template <typename T>
std::vector<T>& conv_scratch2() {
  thread_local std::vector<T> buf;
  return buf;
}

template <typename T>
std::vector<T>& conv_scratch3() {
  thread_local std::vector<T> buf;
  return buf;
}

// dw[KK,F] += sum_i outer(x_row_i, gy_row_i) with a zero skip on x.
template <typename T>
void rank1_accum(const T* x, const T* gy, T* dw, int m, size_t kk, int f) {
#ifdef TP_GEMM_VECTOR
  if constexpr (std::is_same_v<T, float> || std::is_same_v<T, double>) {
    using V = typename GemmVec<T>::V;
    constexpr int L = GemmVec<T>::lanes;
    const int fv = f - f % L;
    for (int i = 0; i < m; ++i) {
      const T* xrow = x + static_cast<size_t>(i) * kk;
      const T* grow = gy + static_cast<size_t>(i) * f;
      for (size_t p = 0; p < kk; ++p) {
        T cv = xrow[p];
        if (cv == T(0)) continue;
        T* wrow = dw + p * f;
        V cvv = V{} + cv;
        int j = 0;
        for (; j < fv; j += L)
          *reinterpret_cast<V*>(wrow + j) +=
              cvv * *reinterpret_cast<const V*>(grow + j);
        for (; j < f; ++j) wrow[j] += cv * grow[j];
      }
    }
    return;
  }
#endif
  for (int i = 0; i < m; ++i) {
    const T* xrow = x + static_cast<size_t>(i) * kk;
    const T* grow = gy + static_cast<size_t>(i) * f;
    for (size_t p = 0; p < kk; ++p) {
      T cv = xrow[p];
      if (cv == T(0)) continue;
      T* wrow = dw + p * f;
      for (int j = 0; j < f; ++j) wrow[j] += cv * grow[j];
    }
  }
}

inline void check_conv_shapes(const std::vector<int>& in,
                              const std::vector<int>& w,
                              const std::vector<int>& b) {
  if (in.size() != 3) throw std::invalid_argument("conv2d: input must be rank 3 (H,W,C)");
  if (w.size() != 4) throw std::invalid_argument("conv2d: weights must be rank 4 (k,k,C,F)");
  if (w[0] != w[1] || w[0] % 2 == 0)
    throw std::invalid_argument("conv2d: kernel must be square with odd size");
  if (w[2] != in[2])
    throw std::invalid_argument("conv2d: weight channel count does not match input");
  if (b.size() != 1 || b[0] != w[3])
    throw std::invalid_argument("conv2d: bias must be rank 1 with one entry per filter");
}

}  // namespace detail

// Stride-1 same-padding convolution. weights (k,k,C,F), bias (F).
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& in, const TensorT<T>& w,
                          const TensorT<T>& b) {
  detail::check_conv_shapes(in.shape, w.shape, b.shape);
  const int h = in.shape[0], wd = in.shape[1], ch = in.shape[2];
  const int k = w.shape[0], f = w.shape[3];

  auto& colbuf = detail::conv_scratch<T>(h, wd, ch, k);
  detail::im2col_same(in, k, colbuf);

  TensorT<T> out({h, wd, f});
  for (size_t i = 0; i < static_cast<size_t>(h) * wd; ++i)
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + i * f);
  gemm_accum(colbuf.data.data(), w.data.data(), out.data.data(), h * wd,
             k * k * ch, f);
  return out;
}

template <typename T>
struct Conv2dGrads {
  TensorT<T> input, weights, bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const TensorT<T>& grad_out, const TensorT<T>& in,
                               const TensorT<T>& w) {
  detail::check_conv_shapes(in.shape, w.shape, {w.shape[3]});
  const int h = in.shape[0], wd = in.shape[1], ch = in.shape[2];
  const int k = w.shape[0], f = w.shape[3];
  if (grad_out.shape != std::vector<int>{h, wd, f})
    throw std::invalid_argument("conv2d: grad_out shape does not match output");
  const int m = h * wd;
  const size_t kk = static_cast<size_t>(k) * k * ch;

  auto& colbuf = detail::conv_scratch<T>(h, wd, ch, k);
  detail::im2col_same(in, k, colbuf);
  const std::vector<T>& cols = colbuf.data;

  Conv2dGrads<T> g{TensorT<T>({h, wd, ch}), TensorT<T>(w.shape), TensorT<T>({f})};

  // d/dW = cols^T * grad_out, accumulated as rank-1 updates. Post-relu
  // activations and padding make cols sparse, hence the zero skip.
  detail::rank1_accum(cols.data(), grad_out.data.data(), g.weights.data.data(),
                      m, kk, f);

  for (int i = 0; i < m; ++i) {
    const T* grow = &grad_out.data[static_cast<size_t>(i) * f];
    for (int j = 0; j < f; ++j) g.bias.data[j] += grow[j];
  }

  // d/dcols = grad_out * W^T, then fold back onto the input grid
  auto& wt = detail::conv_scratch2<T>();
  wt.resize(static_cast<size_t>(f) * kk);
  for (size_t p = 0; p < kk; ++p)
    for (int j = 0; j < f; ++j) wt[static_cast<size_t>(j) * kk + p] = w.data[p * f + j];

  auto& gcols = detail::conv_scratch3<T>();
  gcols.resize(static_cast<size_t>(m) * kk);
  gemm_write(grad_out.data.data(), wt.data(), gcols.data(), m, f,
             static_cast<int>(kk));
  detail::col2im_add(gcols, h, wd, ch, k, g.input);
  return g;
}

template <typename T>
struct Pool2Result {
  TensorT<T> out;
  std::vector<int32_t> argmax;  // flat input index per output element
};

// 2x2 max pool, stride 2. Ties keep the first index in row-major window order.
template <typename T>
Pool2Result<T> maxpool2_forward(const TensorT<T>& in) {
  if (in.rank() != 3) throw std::invalid_argument("maxpool2: input must be rank 3");
  const int h = in.shape[0], w = in.shape[1], ch = in.shape[2];
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("maxpool2: spatial extents must be even");
  Pool2Result<T> r{TensorT<T>({h / 2, w / 2, ch}), {}};
  r.argmax.assign(r.out.numel(), 0);
  for (int oy = 0; oy < h / 2; ++oy) {
    for (int ox = 0; ox < w / 2; ++ox) {
      for (int c = 0; c < ch; ++c) {
        int32_t best_idx = -1;
        T best = T(0);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            size_t idx = (static_cast<size_t>(2 * oy + dy) * w + (2 * ox + dx)) * ch + c;
            T v = in.data[idx];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = static_cast<int32_t>(idx);
            }
          }
        }
        size_t oidx = (static_cast<size_t>(oy) * (w / 2) + ox) * ch + c;
        r.out.data[oidx] = best;
        r.argmax[oidx] = best_idx;
      }
    }
  }
  return r;
}

template <typename T>
TensorT<T> maxpool2_backward(const TensorT<T>& grad_out,
                             const std::vector<int32_t>& argmax,
                             const std::vector<int>& in_shape) {
  TensorT<T> gin(in_shape);
  if (grad_out.numel() != argmax.size())
    throw std::invalid_argument("maxpool2: grad_out does not match recorded argmax");
  for (size_t i = 0; i < argmax.size(); ++i) {
    auto idx = static_cast<size_t>(argmax[i]);
    if (idx >= gin.numel())
      throw std::invalid_argument("maxpool2: argmax index out of range");
    gin.data[idx] += grad_out.data[i];
  }
  return gin;
}

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& in) {
  TensorT<T> out(in.shape);
  for (size_t i = 0; i < in.numel(); ++i) out.data[i] = in.data[i] > T(0) ? in.data[i] : T(0);
  return out;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& in) {
  if (grad_out.shape != in.shape)
    throw std::invalid_argument("relu: grad_out shape does not match input");
  TensorT<T> gin(in.shape);
  for (size_t i = 0; i < in.numel(); ++i)
    gin.data[i] = in.data[i] > T(0) ? grad_out.data[i] : T(0);
  return gin;
}

// Fully connected: x (n), weights (n,m), bias (m) -> (m).
template <typename T>
TensorT<T> dense_forward(const TensorT<T>& x, const TensorT<T>& w,
                         const TensorT<T>& b) {
  if (x.rank() != 1) throw std::invalid_argument("dense: input must be rank 1");
  if (w.rank() != 2 || w.shape[0] != x.shape[0])
    throw std::invalid_argument("dense: weight rows must match input length");
  if (b.rank() != 1 || b.shape[0] != w.shape[1])
    throw std::invalid_argument("dense: bias length must match unit count");
  const int n = w.shape[0], m = w.shape[1];
  TensorT<T> out({m});
  out.data = b.data;
  for (int i = 0; i < n; ++i) {
    T xv = x.data[i];
    if (xv == T(0)) continue;  // post-ReLU inputs are sparse
    const T* wrow = &w.data[static_cast<size_t>(i) * m];
    for (int j = 0; j < m; ++j) out.data[j] += xv * wrow[j];
  }
  return out;
}

template <typename T>
struct DenseGrads {
  TensorT<T> input, weights, bias;
};

template <typename T>
DenseGrads<T> dense_backward(const TensorT<T>& grad_out, const TensorT<T>& x,
                             const TensorT<T>& w) {
  const int n = w.shape[0], m = w.shape[1];
  if (grad_out.rank() != 1 || grad_out.shape[0] != m)
    throw std::invalid_argument("dense: grad_out length must match unit count");
  DenseGrads<T> g{TensorT<T>(x.shape), TensorT<T>(w.shape), grad_out};
  for (int i = 0; i < n; ++i) {
    const T* wrow = &w.data[static_cast<size_t>(i) * m];
    T* grow = &g.weights.data[static_cast<size_t>(i) * m];
    T xv = x.data[i];
    T acc = T(0);
    for (int j = 0; j < m; ++j) {
      acc += wrow[j] * grad_out.data[j];
      grow[j] = xv * grad_out.data[j];
    }
    g.input.data[i] = acc;
  }
  return g;
}

// Numerically stable softmax: shift by the max before exponentiating.
template <typename T>
TensorT<T> softmax(const TensorT<T>& logits) {
  if (logits.rank() != 1 || logits.shape[0] < 1)
    throw std::invalid_argument("softmax: input must be a non-empty vector");
  TensorT<T> out(logits.shape);
  T mx = logits.data[0];
  for (T v : logits.data) mx = std::max(mx, v);
  T sum = T(0);
  for (size_t i = 0; i < logits.numel(); ++i) {
    out.data[i] = std::exp(logits.data[i] - mx);
    sum += out.data[i];
  }
  for (auto& v : out.data) v /= sum;
  return out;
}

template <typename T>
struct CrossEntropyResult {
  T loss;
  TensorT<T> grad_logits;  // softmax+NLL fused: p - onehot(target)
};

// Categorical cross-entropy on softmax output. The gradient is taken with
// respect to the logits feeding the softmax (fused form), which is the only
// way it is consumed in training.
template <typename T>
CrossEntropyResult<T> cross_entropy(const TensorT<T>& probs, ClassLabel target) {
  if (probs.rank() != 1 || probs.shape[0] != kNumClasses)
    throw std::invalid_argument("cross_entropy: expected a 3-class probability vector");
  int t = label_index(target);
  T p = std::max(probs.data[t], static_cast<T>(1e-12));
  CrossEntropyResult<T> r{static_cast<T>(-std::log(p)), probs};
  r.grad_logits.data[t] -= T(1);
  return r;
}

}  // namespace tp
