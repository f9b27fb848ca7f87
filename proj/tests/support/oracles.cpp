// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <cmath>

namespace oracle {

namespace dg = manet::degradation;

Tensor<double> random_tensor(Shape s, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<double> t(s);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& w, const std::vector<double>& bias, int stride,
                      int pad) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const int oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  Tensor<double> out(Shape{xs.n, ws.n, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int o = 0; o < ws.n; ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(o)];
          for (int c = 0; c < xs.c; ++c)
            for (int a = 0; a < ws.h; ++a)
              for (int b = 0; b < ws.w; ++b) {
                const int r = i * stride + a - pad;
                const int q = j * stride + b - pad;
                if (r < 0 || q < 0 || r >= xs.h || q >= xs.w) continue;
                acc += w.at(o, c, a, b) * x.at(n, c, r, q);
              }
          out.at(n, o, i, j) = acc;
        }
  return out;
}

Tensor<double> conv_transpose2d(const Tensor<double>& x, const Tensor<double>& w, int stride) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const int oh = (xs.h - 1) * stride + ws.h;
  const int ow = (xs.w - 1) * stride + ws.w;
  Tensor<double> out(Shape{xs.n, ws.c, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int i = 0; i < xs.h; ++i)
        for (int j = 0; j < xs.w; ++j)
          for (int o = 0; o < ws.c; ++o)
            for (int a = 0; a < ws.h; ++a)
              for (int b = 0; b < ws.w; ++b) out.at(n, o, i * stride + a, j * stride + b) += x.at(n, c, i, j) * w.at(c, o, a, b);
  return out;
}

Tensor<double> grouped_conv3x3(const Tensor<double>& x, const std::vector<Tensor<double>>& group_weights,
                               const std::vector<std::vector<double>>& group_bias) {
  const Shape xs = x.shape();
  const int groups = static_cast<int>(group_weights.size());
  const int ci = xs.c / groups;
  const int co = group_weights[0].shape().n;
  Tensor<double> out(Shape{xs.n, co * groups, xs.h, xs.w});
  for (int g = 0; g < groups; ++g) {
    const auto& w = group_weights[static_cast<std::size_t>(g)];
    for (int n = 0; n < xs.n; ++n)
      for (int o = 0; o < co; ++o)
        for (int i = 0; i < xs.h; ++i)
          for (int j = 0; j < xs.w; ++j) {
            double acc = group_bias[static_cast<std::size_t>(g)][static_cast<std::size_t>(o)];
            for (int c = 0; c < ci; ++c)
              for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                  const int r = i + a - 1;
                  const int q = j + b - 1;
                  if (r < 0 || q < 0 || r >= xs.h || q >= xs.w) continue;
                  acc += w.at(o, c, a, b) * x.at(n, g * ci + c, r, q);
                }
            out.at(n, g * co + o, i, j) = acc;
          }
  }
  return out;
}

double inner(const Tensor<double>& a, const Tensor<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

int mirror(int i, int n) {
  // Period 2(n - 1) sequence 0, 1, ..., n-1, n-2, ..., 1.
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

dg::Image convolve(const dg::Image& img, const dg::Kernel& k) {
  const int r = k.size / 2;
  dg::Image out(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c)
    for (int i = 0; i < img.height; ++i)
      for (int j = 0; j < img.width; ++j) {
        double acc = 0.0;
        for (int a = 0; a < k.size; ++a)
          for (int b = 0; b < k.size; ++b)
            acc += k.at(a, b) * img.at(c, mirror(i - a + r, img.height), mirror(j - b + r, img.width));
        out.at(c, i, j) = acc;
      }
  return out;
}

dg::Image correlate_per_pixel(const dg::Image& img, const std::vector<dg::Kernel>& kernels,
                              const std::vector<int>& kernel_of_pixel) {
  dg::Image out(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c)
    for (int i = 0; i < img.height; ++i)
      for (int j = 0; j < img.width; ++j) {
        const auto& k = kernels[static_cast<std::size_t>(kernel_of_pixel[static_cast<std::size_t>(i * img.width + j)])];
        const int r = k.size / 2;
        double acc = 0.0;
        for (int a = 0; a < k.size; ++a)
          for (int b = 0; b < k.size; ++b)
            acc += k.at(a, b) * img.at(c, mirror(i + a - r, img.height), mirror(j + b - r, img.width));
        out.at(c, i, j) = acc;
      }
  return out;
}

double psnr(const dg::Image& a, const dg::Image& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) se += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  const double mse = se / static_cast<double>(a.data.size());
  if (mse < 1e-10) return 100.0;
  return -10.0 * std::log10(mse);
}

double ssim(const dg::Image& a, const dg::Image& b) {
  const int k = 11;
  double wsum = 0.0;
  std::vector<double> w(k * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double di = i - 5;
      const double dj = j - 5;
      w[static_cast<std::size_t>(i * k + j)] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      wsum += w[static_cast<std::size_t>(i * k + j)];
    }
  for (double& v : w) v /= wsum;
  const double c1 = 0.0001;
  const double c2 = 0.0009;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i + k <= a.height; ++i)
      for (int j = 0; j + k <= a.width; ++j) {
        double ma = 0, mb = 0;
        for (int p = 0; p < k; ++p)
          for (int q = 0; q < k; ++q) {
            const double g = w[static_cast<std::size_t>(p * k + q)];
            ma += g * a.at(c, i + p, j + q);
            mb += g * b.at(c, i + p, j + q);
          }
        double va = 0, vb = 0, cov = 0;
        for (int p = 0; p < k; ++p)
          for (int q = 0; q < k; ++q) {
            const double g = w[static_cast<std::size_t>(p * k + q)];
            const double da = a.at(c, i + p, j + q) - ma;
            const double db = b.at(c, i + p, j + q) - mb;
            va += g * da * da;
            vb += g * db * db;
            cov += g * da * db;
          }
        acc += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    total += acc / count;
  }
  return total / a.channels;
}

double kernel_l1(const Tensor<double>& a, const Tensor<double>& b) {
  const Shape s = a.shape();
  double acc = 0.0;
  for (int n = 0; n < s.n; ++n)
    for (int i = 0; i < s.h; ++i)
      for (int j = 0; j < s.w; ++j)
        for (int t = 0; t < s.c; ++t) acc += std::abs(a.at(n, t, i, j) - b.at(n, t, i, j));
  return acc / (static_cast<double>(s.n) * s.h * s.w);
}

}  // namespace oracle
