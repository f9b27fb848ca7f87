// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace manet::nn {

std::uint64_t& mac_counter() {
  thread_local std::uint64_t counter = 0;
  return counter;
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

struct ConvGeometry {
  int channels, height, width;  // image side
  int kh, kw, stride, pad;
  int out_h, out_w;             // column side
  std::size_t rows() const { return static_cast<std::size_t>(channels) * kh * kw; }
  std::size_t cols() const { return static_cast<std::size_t>(out_h) * out_w; }
};

// Lays out every receptive window of `src` (C x H x W) as a column.
template <typename T>
void im2col(const T* src, const ConvGeometry& g, T* col) {
  const std::size_t P = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    const T* plane = src + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        T* row = col + ((static_cast<std::size_t>(c) * g.kh + ki) * g.kw + kj) * P;
        for (int oh = 0; oh < g.out_h; ++oh) {
          T* dst = row + static_cast<std::size_t>(oh) * g.out_w;
          const int ih = oh * g.stride - g.pad + ki;
          if (ih < 0 || ih >= g.height) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* line = plane + static_cast<std::size_t>(ih) * g.width;
          if (g.stride == 1) {
            const int lo = std::clamp(g.pad - kj, 0, g.out_w);
            const int hi = std::clamp(g.width + g.pad - kj, lo, g.out_w);
            std::fill(dst, dst + lo, T(0));
            std::copy(line + lo - g.pad + kj, line + hi - g.pad + kj, dst + lo);
            std::fill(dst + hi, dst + g.out_w, T(0));
          } else {
            for (int ow = 0; ow < g.out_w; ++ow) {
              const int iw = ow * g.stride - g.pad + kj;
              dst[ow] = (iw >= 0 && iw < g.width) ? line[iw] : T(0);
            }
          }
        }
      }
    }
  }
}

// Scatter-adds columns back onto an image; the adjoint of im2col.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* dst) {
  const std::size_t P = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    T* plane = dst + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const T* row = col + ((static_cast<std::size_t>(c) * g.kh + ki) * g.kw + kj) * P;
        for (int oh = 0; oh < g.out_h; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          if (ih < 0 || ih >= g.height) continue;
          const T* srcrow = row + static_cast<std::size_t>(oh) * g.out_w;
          T* line = plane + static_cast<std::size_t>(ih) * g.width;
          if (g.stride == 1) {
            const int lo = std::clamp(g.pad - kj, 0, g.out_w);
            const int hi = std::clamp(g.width + g.pad - kj, lo, g.out_w);
            T* out = line - g.pad + kj;
            for (int ow = lo; ow < hi; ++ow) out[ow] += srcrow[ow];
          } else {
            for (int ow = 0; ow < g.out_w; ++ow) {
              const int iw = ow * g.stride - g.pad + kj;
              if (iw >= 0 && iw < g.width) line[iw] += srcrow[ow];
            }
          }
        }
      }
    }
  }
}

// C[M x P] += A[M x K] * B[K x P]
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, std::size_t M, std::size_t K, std::size_t P) {
  std::size_t m = 0;
  for (; m + 4 <= M; m += 4) {
    T* c0 = C + m * P;
    T* c1 = c0 + P;
    T* c2 = c1 + P;
    T* c3 = c2 + P;
    for (std::size_t k = 0; k < K; ++k) {
      const T a0 = A[m * K + k];
      const T a1 = A[(m + 1) * K + k];
      const T a2 = A[(m + 2) * K + k];
      const T a3 = A[(m + 3) * K + k];
      const T* b = B + k * P;
      for (std::size_t p = 0; p < P; ++p) {
        const T bv = b[p];
        c0[p] += a0 * bv;
        c1[p] += a1 * bv;
        c2[p] += a2 * bv;
        c3[p] += a3 * bv;
      }
    }
  }
  for (; m < M; ++m) {
    T* c = C + m * P;
    for (std::size_t k = 0; k < K; ++k) {
      const T a = A[m * K + k];
      const T* b = B + k * P;
      for (std::size_t p = 0; p < P; ++p) c[p] += a * b[p];
    }
  }
}

// C[K x P] += A[M x K]^T * B[M x P]
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, std::size_t M, std::size_t K, std::size_t P) {
  std::size_t m = 0;
  for (; m + 4 <= M; m += 4) {
    const T* b0 = B + m * P;
    const T* b1 = b0 + P;
    const T* b2 = b1 + P;
    const T* b3 = b2 + P;
    for (std::size_t k = 0; k < K; ++k) {
      const T a0 = A[m * K + k];
      const T a1 = A[(m + 1) * K + k];
      const T a2 = A[(m + 2) * K + k];
      const T a3 = A[(m + 3) * K + k];
      T* c = C + k * P;
      for (std::size_t p = 0; p < P; ++p) c[p] += a0 * b0[p] + a1 * b1[p] + a2 * b2[p] + a3 * b3[p];
    }
  }
  for (; m < M; ++m) {
    const T* b = B + m * P;
    for (std::size_t k = 0; k < K; ++k) {
      const T a = A[m * K + k];
      T* c = C + k * P;
      for (std::size_t p = 0; p < P; ++p) c[p] += a * b[p];
    }
  }
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T lanes[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) lanes[j] += a[i + j] * b[i + j];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) +
         tail;
}

// C[M x K] += A[M x P] * B[K x P]^T
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, std::size_t M, std::size_t K, std::size_t P) {
  for (std::size_t m = 0; m < M; ++m) {
    const T* a = A + m * P;
    for (std::size_t k = 0; k < K; ++k) C[m * K + k] += dot(a, B + k * P, P);
  }
}

template <typename T>
void add_bias_grad(const Tensor<T>& gout, Tensor<T>& gbias) {
  const Shape& s = gout.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* g = gout.plane(n, c);
      T acc = 0;
      for (std::size_t p = 0; p < s.plane(); ++p) acc += g[p];
      gbias[static_cast<std::size_t>(c)] += acc;
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (stride < 1) throw ArgumentError("conv2d: stride must be >= 1");
  if (pad < 0) throw ArgumentError("conv2d: pad must be >= 0");
  require(ws.c == xs.c, "conv2d: input has " + std::to_string(xs.c) + " channels, weight expects " +
                            std::to_string(ws.c));
  if (bias.defined()) {
    require(bias.value().size() == static_cast<std::size_t>(ws.n), "conv2d: bias length must equal C_out");
  }
  ConvGeometry g{xs.c, xs.h, xs.w, ws.h, ws.w, stride, pad, 0, 0};
  require(xs.h + 2 * pad >= ws.h && xs.w + 2 * pad >= ws.w,
          "conv2d: kernel larger than padded input " + xs.str());
  g.out_h = (xs.h + 2 * pad - ws.h) / stride + 1;
  g.out_w = (xs.w + 2 * pad - ws.w) / stride + 1;

  const std::size_t M = static_cast<std::size_t>(ws.n);
  const std::size_t K = g.rows();
  const std::size_t P = g.cols();
  const bool direct = ws.h == 1 && ws.w == 1 && stride == 1 && pad == 0;

  Tensor<T> out(Shape{xs.n, ws.n, g.out_h, g.out_w});
  std::vector<T> col(direct ? 0 : K * P);
  for (int n = 0; n < xs.n; ++n) {
    T* o = out.plane(n, 0);
    if (bias.defined()) {
      for (std::size_t m = 0; m < M; ++m) std::fill(o + m * P, o + (m + 1) * P, bias.value()[m]);
    }
    const T* cols = input.value().plane(n, 0);
    if (!direct) {
      im2col(cols, g, col.data());
      cols = col.data();
    }
    gemm_nn(weight.value().raw(), cols, o, M, K, P);
  }
  mac_counter() += static_cast<std::uint64_t>(xs.n) * M * K * P;

  auto xn = input.node();
  auto wn = weight.node();
  auto bn = bias.node();
  return detail::make_result<T>(
      "conv2d", std::move(out), {&input, &weight, &bias}, [xn, wn, bn, g, M, K, P, direct](Node<T>& self) {
        const Tensor<T>& gout = self.grad;
        const Tensor<T>& x = xn->value;
        const Tensor<T>& w = wn->value;
        const int batch = x.shape().n;
        if (bn && bn->requires_grad) add_bias_grad(gout, bn->grad_buffer());
        std::vector<T> col(direct ? 0 : K * P);
        std::vector<T> gcol(K * P);
        for (int n = 0; n < batch; ++n) {
          const T* go = gout.plane(n, 0);
          if (wn->requires_grad) {
            const T* cols = x.plane(n, 0);
            if (!direct) {
              im2col(cols, g, col.data());
              cols = col.data();
            }
            gemm_nt(go, cols, wn->grad_buffer().raw(), M, K, P);
          }
          if (xn->requires_grad) {
            T* gx = xn->grad_buffer().plane(n, 0);
            if (direct) {
              gemm_tn(w.raw(), go, gx, M, K, P);
            } else {
              std::fill(gcol.begin(), gcol.end(), T(0));
              gemm_tn(w.raw(), go, gcol.data(), M, K, P);
              col2im(gcol.data(), g, gx);
            }
          }
        }
      });
}

template <typename T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (stride < 1) throw ArgumentError("conv_transpose2d: stride must be >= 1");
  require(ws.n == xs.c, "conv_transpose2d: input has " + std::to_string(xs.c) +
                            " channels, weight expects " + std::to_string(ws.n));
  if (bias.defined()) {
    require(bias.value().size() == static_cast<std::size_t>(ws.c),
            "conv_transpose2d: bias length must equal output channels");
  }
  // Geometry of the forward conv this op is the adjoint of: image = our output.
  ConvGeometry g{ws.c, (xs.h - 1) * stride + ws.h, (xs.w - 1) * stride + ws.w, ws.h, ws.w, stride, 0,
                 xs.h, xs.w};
  const std::size_t M = static_cast<std::size_t>(ws.n);  // our input channels
  const std::size_t K = g.rows();
  const std::size_t P = g.cols();

  Tensor<T> out(Shape{xs.n, ws.c, g.height, g.width});
  std::vector<T> gcol(K * P);
  for (int n = 0; n < xs.n; ++n) {
    std::fill(gcol.begin(), gcol.end(), T(0));
    gemm_tn(weight.value().raw(), input.value().plane(n, 0), gcol.data(), M, K, P);
    T* o = out.plane(n, 0);
    col2im(gcol.data(), g, o);
    if (bias.defined()) {
      const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
      for (int c = 0; c < ws.c; ++c) {
        const T b = bias.value()[static_cast<std::size_t>(c)];
        for (std::size_t p = 0; p < plane; ++p) o[c * plane + p] += b;
      }
    }
  }
  mac_counter() += static_cast<std::uint64_t>(xs.n) * M * K * P;

  auto xn = input.node();
  auto wn = weight.node();
  auto bn = bias.node();
  return detail::make_result<T>(
      "conv_transpose2d", std::move(out), {&input, &weight, &bias}, [xn, wn, bn, g, M, K, P](Node<T>& self) {
        const Tensor<T>& gout = self.grad;
        const Tensor<T>& x = xn->value;
        const Tensor<T>& w = wn->value;
        if (bn && bn->requires_grad) add_bias_grad(gout, bn->grad_buffer());
        std::vector<T> col(K * P);
        for (int n = 0; n < x.shape().n; ++n) {
          im2col(gout.plane(n, 0), g, col.data());
          if (xn->requires_grad) gemm_nn(w.raw(), col.data(), xn->grad_buffer().plane(n, 0), M, K, P);
          if (wn->requires_grad) gemm_nt(x.plane(n, 0), col.data(), wn->grad_buffer().raw(), M, K, P);
        }
      });
}

template <typename T>
Var<T> relu(const Var<T>& input) {
  const Tensor<T>& x = input.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  auto xn = input.node();
  return detail::make_result<T>("relu", std::move(out), {&input}, [xn](Node<T>& self) {
    Tensor<T>& gx = xn->grad_buffer();
    const Tensor<T>& x = xn->value;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > T(0)) gx[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> softmax_channels(const Var<T>& input) {
  const Tensor<T>& x = input.value();
  const Shape& s = x.shape();
  if (s.c < 1) throw DimensionError("softmax_channels: no channels");
  if (!x.all_finite()) throw NumericError("softmax_channels: non-finite input");
  const std::size_t P = s.plane();
  Tensor<T> out(s);
  std::vector<T> peak(P), total(P);
  for (int n = 0; n < s.n; ++n) {
    std::fill(peak.begin(), peak.end(), -std::numeric_limits<T>::infinity());
    std::fill(total.begin(), total.end(), T(0));
    for (int c = 0; c < s.c; ++c) {
      const T* xp = x.plane(n, c);
      for (std::size_t p = 0; p < P; ++p) peak[p] = std::max(peak[p], xp[p]);
    }
    for (int c = 0; c < s.c; ++c) {
      const T* xp = x.plane(n, c);
      T* op = out.plane(n, c);
      for (std::size_t p = 0; p < P; ++p) {
        op[p] = std::exp(xp[p] - peak[p]);
        total[p] += op[p];
      }
    }
    for (int c = 0; c < s.c; ++c) {
      T* op = out.plane(n, c);
      for (std::size_t p = 0; p < P; ++p) op[p] /= total[p];
    }
  }
  auto xn = input.node();
  return detail::make_result<T>("softmax_channels", std::move(out), {&input}, [xn](Node<T>& self) {
    const Tensor<T>& y = self.value;
    const Tensor<T>& g = self.grad;
    const Shape& s = y.shape();
    const std::size_t P = s.plane();
    Tensor<T>& gx = xn->grad_buffer();
    std::vector<T> inner(P);
    for (int n = 0; n < s.n; ++n) {
      std::fill(inner.begin(), inner.end(), T(0));
      for (int c = 0; c < s.c; ++c) {
        const T* yp = y.plane(n, c);
        const T* gp = g.plane(n, c);
        for (std::size_t p = 0; p < P; ++p) inner[p] += yp[p] * gp[p];
      }
      for (int c = 0; c < s.c; ++c) {
        const T* yp = y.plane(n, c);
        const T* gp = g.plane(n, c);
        T* gxp = gx.plane(n, c);
        for (std::size_t p = 0; p < P; ++p) gxp[p] += yp[p] * (gp[p] - inner[p]);
      }
    }
  });
}

template <typename T>
Var<T> nearest_upsample(const Var<T>& input, int factor) {
  if (factor < 1) throw ArgumentError("nearest_upsample: factor must be >= 1");
  const Tensor<T>& x = input.value();
  const Shape& s = x.shape();
  Tensor<T> out(Shape{s.n, s.c, s.h * factor, s.w * factor});
  const int ow = s.w * factor;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* xp = x.plane(n, c);
      T* op = out.plane(n, c);
      for (int i = 0; i < s.h * factor; ++i) {
        const T* src = xp + static_cast<std::size_t>(i / factor) * s.w;
        T* dst = op + static_cast<std::size_t>(i) * ow;
        for (int j = 0; j < ow; ++j) dst[j] = src[j / factor];
      }
    }
  }
  auto xn = input.node();
  return detail::make_result<T>("nearest_upsample", std::move(out), {&input}, [xn, factor](Node<T>& self) {
    Tensor<T>& gx = xn->grad_buffer();
    const Shape& s = gx.shape();
    const int ow = s.w * factor;
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const T* gp = self.grad.plane(n, c);
        T* gxp = gx.plane(n, c);
        for (int i = 0; i < s.h * factor; ++i) {
          const T* src = gp + static_cast<std::size_t>(i) * ow;
          T* dst = gxp + static_cast<std::size_t>(i / factor) * s.w;
          for (int j = 0; j < ow; ++j) dst[j / factor] += src[j];
        }
      }
    }
  });
}

template <typename T>
std::vector<Var<T>> split_channels(const Var<T>& input, int parts) {
  const Shape& s = input.shape();
  if (parts < 1 || s.c % parts != 0) {
    throw ArgumentError("split_channels: " + std::to_string(parts) + " does not divide " +
                        std::to_string(s.c) + " channels");
  }
  const int per = s.c / parts;
  const std::size_t block = static_cast<std::size_t>(per) * s.plane();
  auto xn = input.node();
  std::vector<Var<T>> out;
  out.reserve(static_cast<std::size_t>(parts));
  for (int i = 0; i < parts; ++i) {
    Tensor<T> part(Shape{s.n, per, s.h, s.w});
    for (int n = 0; n < s.n; ++n) {
      const T* src = input.value().plane(n, i * per);
      std::copy(src, src + block, part.plane(n, 0));
    }
    out.push_back(detail::make_result<T>("split_channels", std::move(part), {&input},
                                         [xn, i, per, block](Node<T>& self) {
                                           Tensor<T>& gx = xn->grad_buffer();
                                           for (int n = 0; n < gx.shape().n; ++n) {
                                             const T* g = self.grad.plane(n, 0);
                                             T* dst = gx.plane(n, i * per);
                                             for (std::size_t k = 0; k < block; ++k) dst[k] += g[k];
                                           }
                                         }));
  }
  return out;
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ArgumentError("concat_channels: no inputs");
  Shape s = parts.front().shape();
  int channels = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    require(ps.n == s.n && ps.h == s.h && ps.w == s.w,
            "concat_channels: extent mismatch " + ps.str() + " vs " + s.str());
    channels += ps.c;
  }
  Tensor<T> out(Shape{s.n, channels, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    int at = 0;
    for (const auto& p : parts) {
      const std::size_t block = static_cast<std::size_t>(p.shape().c) * s.plane();
      const T* src = p.value().plane(n, 0);
      std::copy(src, src + block, out.plane(n, at));
      at += p.shape().c;
    }
  }
  // Tape lookup handles any number of inputs through the first recorded one.
  Tape<T>* tape = nullptr;
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node<T>>> nodes;
  for (const auto& p : parts) {
    if (p.tape() != nullptr) {
      if (tape != nullptr && tape != p.tape()) throw ArgumentError("inputs recorded on different tapes");
      tape = p.tape();
    }
    needs_grad = needs_grad || p.requires_grad();
    nodes.push_back(p.node());
  }
  if (!out.all_finite()) throw NumericError("concat_channels: non-finite output");
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(out);
  if (tape != nullptr && needs_grad) {
    node->requires_grad = true;
    node->backward = [nodes](Node<T>& self) {
      const Shape& s = self.grad.shape();
      for (int n = 0; n < s.n; ++n) {
        int at = 0;
        for (const auto& pn : nodes) {
          const int c = pn->value.shape().c;
          if (pn->requires_grad) {
            const std::size_t block = static_cast<std::size_t>(c) * s.plane();
            const T* g = self.grad.plane(n, at);
            T* dst = pn->grad_buffer().plane(n, 0);
            for (std::size_t k = 0; k < block; ++k) dst[k] += g[k];
          }
          at += c;
        }
      }
    };
    tape->record(node);
  }
  return Var<T>(std::move(node), tape);
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result<T>("add", std::move(out), {&a, &b}, [an, bn](Node<T>& self) {
    for (auto* n : {an.get(), bn.get()}) {
      if (!n->requires_grad) continue;
      Tensor<T>& g = n->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result<T>("mul", std::move(out), {&a, &b}, [an, bn](Node<T>& self) {
    if (an->requires_grad) {
      Tensor<T>& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      Tensor<T>& g = bn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->value[i];
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& input) {
  T acc = 0;
  for (T v : input.value().data()) acc += v;
  Tensor<T> out(Shape{1, 1, 1, 1}, acc);
  auto xn = input.node();
  return detail::make_result<T>("sum", std::move(out), {&input}, [xn](Node<T>& self) {
    Tensor<T>& g = xn->grad_buffer();
    const T go = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go;
  });
}

template <typename T>
Var<T> pad_replicate(const Var<T>& input, int bottom, int right) {
  if (bottom < 0 || right < 0) throw ArgumentError("pad_replicate: negative padding");
  const Shape& s = input.shape();
  if (bottom == 0 && right == 0) return input;
  if (s.h < 1 || s.w < 1) throw DimensionError("pad_replicate: empty input");
  const int oh = s.h + bottom;
  const int ow = s.w + right;
  Tensor<T> out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = input.value().plane(n, c);
      T* dst = out.plane(n, c);
      for (int i = 0; i < oh; ++i) {
        const T* row = src + static_cast<std::size_t>(std::min(i, s.h - 1)) * s.w;
        for (int j = 0; j < ow; ++j) dst[static_cast<std::size_t>(i) * ow + j] = row[std::min(j, s.w - 1)];
      }
    }
  }
  auto xn = input.node();
  return detail::make_result<T>("pad_replicate", std::move(out), {&input}, [xn, oh, ow](Node<T>& self) {
    Tensor<T>& gx = xn->grad_buffer();
    const Shape& s = gx.shape();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const T* g = self.grad.plane(n, c);
        T* dst = gx.plane(n, c);
        for (int i = 0; i < oh; ++i) {
          T* row = dst + static_cast<std::size_t>(std::min(i, s.h - 1)) * s.w;
          for (int j = 0; j < ow; ++j) row[std::min(j, s.w - 1)] += g[static_cast<std::size_t>(i) * ow + j];
        }
      }
    }
  });
}

template <typename T>
Var<T> crop(const Var<T>& input, int height, int width) {
  const Shape& s = input.shape();
  if (height < 1 || width < 1 || height > s.h || width > s.w) {
    throw DimensionError("crop: window " + std::to_string(height) + "x" + std::to_string(width) +
                         " does not fit " + s.str());
  }
  if (height == s.h && width == s.w) return input;
  Tensor<T> out(Shape{s.n, s.c, height, width});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = input.value().plane(n, c);
      T* dst = out.plane(n, c);
      for (int i = 0; i < height; ++i) {
        std::copy(src + static_cast<std::size_t>(i) * s.w, src + static_cast<std::size_t>(i) * s.w + width,
                  dst + static_cast<std::size_t>(i) * width);
      }
    }
  }
  auto xn = input.node();
  return detail::make_result<T>("crop", std::move(out), {&input}, [xn, height, width](Node<T>& self) {
    Tensor<T>& gx = xn->grad_buffer();
    const Shape& s = gx.shape();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const T* g = self.grad.plane(n, c);
        T* dst = gx.plane(n, c);
        for (int i = 0; i < height; ++i) {
          for (int j = 0; j < width; ++j) {
            dst[static_cast<std::size_t>(i) * s.w + j] += g[static_cast<std::size_t>(i) * width + j];
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> l1_distance(const Var<T>& a, const Var<T>& b, double divisor) {
  require(a.shape() == b.shape(), "l1_distance: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  if (!(divisor > 0.0)) throw ArgumentError("l1_distance: divisor must be positive");
  const T* av = a.value().raw();
  const T* bv = b.value().raw();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) acc += std::abs(static_cast<double>(av[i]) - bv[i]);
  Tensor<T> out(Shape{1, 1, 1, 1}, static_cast<T>(acc / divisor));
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result<T>("l1_distance", std::move(out), {&a, &b}, [an, bn, divisor](Node<T>& self) {
    const T scale = static_cast<T>(self.grad[0] / divisor);
    const Tensor<T>& av = an->value;
    const Tensor<T>& bv = bn->value;
    if (an->requires_grad) {
      Tensor<T>& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T d = av[i] - bv[i];
        g[i] += d > T(0) ? scale : (d < T(0) ? -scale : T(0));
      }
    }
    if (bn->requires_grad) {
      Tensor<T>& g = bn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T d = av[i] - bv[i];
        g[i] -= d > T(0) ? scale : (d < T(0) ? -scale : T(0));
      }
    }
  });
}

#define MANET_INSTANTIATE_OPS(T)                                                            \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int);         \
  template Var<T> conv_transpose2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int);    \
  template Var<T> relu<T>(const Var<T>&);                                                   \
  template Var<T> softmax_channels<T>(const Var<T>&);                                       \
  template Var<T> nearest_upsample<T>(const Var<T>&, int);                                  \
  template std::vector<Var<T>> split_channels<T>(const Var<T>&, int);                       \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                           \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                     \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                     \
  template Var<T> sum<T>(const Var<T>&);                                                    \
  template Var<T> pad_replicate<T>(const Var<T>&, int, int);                                \
  template Var<T> crop<T>(const Var<T>&, int, int);                                         \
  template Var<T> l1_distance<T>(const Var<T>&, const Var<T>&, double);

MANET_INSTANTIATE_OPS(float)
MANET_INSTANTIATE_OPS(double)

#undef MANET_INSTANTIATE_OPS

}  // namespace manet::nn
