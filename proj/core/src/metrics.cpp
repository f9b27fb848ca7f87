// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace manet::degradation {

double psnr(const Image& a, const Image& b) {
  if (!a.same_extent(b)) throw DimensionError("psnr: extent " + a.extent_str() + " vs " + b.extent_str());
  if (a.data.empty()) throw DimensionError("psnr: empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.data.size());
  if (mse < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    g[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(const double* src, int h, int w, const std::vector<double>& gy,
                                 const std::vector<double>& gx) {
  const int ky = static_cast<int>(gy.size());
  const int kx = static_cast<int>(gx.size());
  const int oh = h - ky + 1;
  const int ow = w - kx + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (int b = 0; b < kx; ++b) acc += gx[static_cast<std::size_t>(b)] * src[static_cast<std::size_t>(i) * w + j + b];
      rows[static_cast<std::size_t>(i) * ow + j] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (int a = 0; a < ky; ++a) acc += gy[static_cast<std::size_t>(a)] * rows[static_cast<std::size_t>(i + a) * ow + j];
      out[static_cast<std::size_t>(i) * ow + j] = acc;
    }
  }
  return out;
}

int window_extent(int n) {
  const int k = std::min(11, n);
  return k % 2 == 0 ? k - 1 : k;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_extent(b)) throw DimensionError("ssim: extent " + a.extent_str() + " vs " + b.extent_str());
  if (a.height < 1 || a.width < 1) throw DimensionError("ssim: empty images");
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto gy = gaussian_window(window_extent(a.height), 1.5);
  const auto gx = gaussian_window(window_extent(a.width), 1.5);
  const int h = a.height;
  const int w = a.width;
  const std::size_t n = a.plane();
  std::vector<double> aa(n), bb(n), ab(n);
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const double* pa = a.data.data() + c * n;
    const double* pb = b.data.data() + c * n;
    for (std::size_t i = 0; i < n; ++i) {
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, gy, gx);
    const auto mu_b = filter_valid(pb, h, w, gy, gx);
    const auto s_aa = filter_valid(aa.data(), h, w, gy, gx);
    const auto s_bb = filter_valid(bb.data(), h, w, gy, gx);
    const auto s_ab = filter_valid(ab.data(), h, w, gy, gx);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double va = s_aa[i] - ma * ma;
      const double vb = s_bb[i] - mb * mb;
      const double cov = s_ab[i] - ma * mb;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / a.channels;
}

Image reblur_decimate(const Image& hr, const KernelMap& map, int scale) {
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  if (map.height != hr.height || map.width != hr.width) {
    throw DimensionError("kernel map extent " + std::to_string(map.height) + "x" + std::to_string(map.width) +
                         " does not cover image " + hr.extent_str());
  }
  if (hr.height % scale != 0 || hr.width % scale != 0) {
    throw ArgumentError("HR extent " + hr.extent_str() + " not divisible by scale " + std::to_string(scale));
  }
  const int size = map.kernel_size;
  const int r = size / 2;
  Image out(hr.channels, hr.height / scale, hr.width / scale);
  out.role = ImageRole::LR;
  out.scale = scale;
  for (int c = 0; c < hr.channels; ++c) {
    for (int li = 0; li < out.height; ++li) {
      for (int lj = 0; lj < out.width; ++lj) {
        const int i = li * scale;
        const int j = lj * scale;
        double acc = 0.0;
        for (int a = 0; a < size; ++a) {
          const int si = reflect_index(i + a - r, hr.height);
          for (int b = 0; b < size; ++b) {
            acc += map.at(a * size + b, i, j) * hr.at(c, si, reflect_index(j + b - r, hr.width));
          }
        }
        out.at(c, li, lj) = acc;
      }
    }
  }
  return out;
}

CropWindow fidelity_window(int hr_height, int hr_width, int scale, int border) {
  auto axis = [&](int hr_extent, int& first, int& count) {
    first = (border + scale - 1) / scale;
    const int last = (hr_extent - 1 - border) / scale;
    count = last - first + 1;
  };
  CropWindow w;
  axis(hr_height, w.top, w.height);
  axis(hr_width, w.left, w.width);
  if (w.height < 1 || w.width < 1) {
    throw DimensionError("HR extent " + std::to_string(hr_height) + "x" + std::to_string(hr_width) +
                         " leaves nothing after the " + std::to_string(border) + " px evaluation border");
  }
  return w;
}

Fidelity lr_fidelity(const Image& hr, const Image& lr_clean, const KernelMap& est, int scale) {
  if (lr_clean.height * scale != hr.height || lr_clean.width * scale != hr.width || lr_clean.channels != hr.channels) {
    throw DimensionError("LR image " + lr_clean.extent_str() + " does not match HR " + hr.extent_str() +
                         " at scale " + std::to_string(scale));
  }
  const Image rec = reblur_decimate(hr, est, scale);
  const CropWindow w = fidelity_window(hr.height, hr.width, scale, est.kernel_size / 2 + 1);
  const Image a = crop(rec, w.top, w.left, w.height, w.width);
  const Image b = crop(lr_clean, w.top, w.left, w.height, w.width);
  return {psnr(a, b), ssim(a, b)};
}

}  // namespace manet::degradation
