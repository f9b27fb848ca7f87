// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace manet::degradation {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kSigmaFloor = 1e-3;
}  // namespace

double normalize_angle(double theta) {
  if (!std::isfinite(theta)) throw ArgumentError("kernel angle must be finite");
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t = 0.0;
  return t;
}

KernelParams KernelParams::make(double sigma1, double sigma2, double theta) {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(sigma1) || !std::isfinite(sigma2)) {
    throw ArgumentError("kernel widths must be positive, got sigma1=" + std::to_string(sigma1) +
                        " sigma2=" + std::to_string(sigma2));
  }
  return KernelParams{sigma1, sigma2, normalize_angle(theta)};
}

Kernel synth_kernel(const KernelParams& p, int size) {
  if (size < 1 || size % 2 == 0) throw ArgumentError("kernel size must be odd and positive, got " + std::to_string(size));
  const KernelParams q = KernelParams::make(p.sigma1, p.sigma2, p.theta);
  const double inv1 = 1.0 / std::pow(std::max(q.sigma1, kSigmaFloor), 2);
  const double inv2 = 1.0 / std::pow(std::max(q.sigma2, kSigmaFloor), 2);
  const double c = std::cos(q.theta);
  const double s = std::sin(q.theta);
  const int r = size / 2;

  Kernel k{size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  double total = 0.0;
  for (int row = 0; row < size; ++row) {
    const double dy = row - r;
    for (int col = 0; col < size; ++col) {
      const double dx = col - r;
      // Coordinates along the rotated principal axes.
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      const double val = std::exp(-0.5 * (u * u * inv1 + v * v * inv2));
      k.taps[static_cast<std::size_t>(row) * size + col] = val;
      total += val;
    }
  }
  for (double& t : k.taps) t /= total;
  return k;
}

KernelParams sample_training_params(std::mt19937_64& rng, int scale) {
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  std::uniform_real_distribution<double> width(0.175 * scale, 2.5 * scale);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  const double s1 = width(rng);
  const double s2 = width(rng);
  const double th = angle(rng);
  return KernelParams::make(s1, s2, th);
}

std::vector<KernelParams> eval_kernel_grid(int scale) {
  std::vector<double> widths;
  switch (scale) {
    case 2: widths = {1, 3, 5}; break;
    case 3: widths = {1, 4, 7}; break;
    case 4: widths = {1, 5, 9}; break;
    default: throw ArgumentError("evaluation kernel grid defined for scale 2, 3, 4 only, got " + std::to_string(scale));
  }
  std::vector<KernelParams> grid;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) grid.push_back(KernelParams::make(widths[i], widths[j], 0.0));
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) grid.push_back(KernelParams::make(widths[i], widths[j], kPi / 4));
  }
  return grid;
}

FieldWidths field_widths(int scale) { return {2.325 * scale, 0.175 * scale}; }

namespace {

KernelField empty_field(int height, int width, int patch_size, int scale) {
  if (height < 1 || width < 1) throw ArgumentError("kernel field extent must be positive");
  if (patch_size < 1) throw ArgumentError("patch size must be positive");
  KernelField f;
  f.height = height;
  f.width = width;
  f.patch_size = patch_size;
  f.rows = (height + patch_size - 1) / patch_size;
  f.cols = (width + patch_size - 1) / patch_size;
  f.scale = scale;
  return f;
}

}  // namespace

KernelField constant_field(const KernelParams& params, int height, int width, int patch_size, int scale) {
  KernelField f = empty_field(height, width, patch_size, scale);
  f.field_type = 0;
  f.patches.assign(static_cast<std::size_t>(f.rows) * f.cols, KernelParams::make(params.sigma1, params.sigma2, params.theta));
  return f;
}

KernelField make_kernel_field(int field_type, int height, int width, int patch_size, int scale,
                              std::mt19937_64& rng) {
  if (field_type < 1 || field_type > 5) {
    throw ArgumentError("kernel field type must be in 1..5, got " + std::to_string(field_type));
  }
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  KernelField f = empty_field(height, width, patch_size, scale);
  f.field_type = field_type;
  const auto [a, b] = field_widths(scale);
  std::uniform_real_distribution<double> width_dist(b, a + b);
  std::uniform_real_distribution<double> angle_dist(0.0, kPi);
  f.patches.reserve(static_cast<std::size_t>(f.rows) * f.cols);
  for (int row = 0; row < f.rows; ++row) {
    const double y = f.rows > 1 ? static_cast<double>(row) / (f.rows - 1) : 0.0;
    for (int col = 0; col < f.cols; ++col) {
      const double x = f.cols > 1 ? static_cast<double>(col) / (f.cols - 1) : 0.0;
      KernelParams p;
      switch (field_type) {
        case 1: p = KernelParams::make(a + b, a * x + b, 0.0); break;
        case 2: p = KernelParams::make(a * y + b, a * x + b, 0.0); break;
        case 3: p = KernelParams::make(a + b, b, kPi * x); break;
        case 4: p = KernelParams::make(a * y + b, a * x + b, kPi * x); break;
        default: {
          const double s1 = width_dist(rng);
          const double s2 = width_dist(rng);
          const double th = angle_dist(rng);
          p = KernelParams::make(s1, s2, th);
        }
      }
      f.patches.push_back(p);
    }
  }
  return f;
}

KernelMoments kernel_moments(const Kernel& k) {
  const int r = k.radius();
  double sxx = 0.0, syy = 0.0, sxy = 0.0, total = 0.0;
  for (int row = 0; row < k.size; ++row) {
    for (int col = 0; col < k.size; ++col) {
      const double w = k.at(row, col);
      const double dx = col - r;
      const double dy = row - r;
      sxx += w * dx * dx;
      syy += w * dy * dy;
      sxy += w * dx * dy;
      total += w;
    }
  }
  if (!(total > 0.0)) throw ArgumentError("kernel moments of an all-zero kernel");
  sxx /= total;
  syy /= total;
  sxy /= total;
  const double mean = 0.5 * (sxx + syy);
  const double diff = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  KernelMoments m;
  m.major = mean + diff;
  m.minor = mean - diff;
  m.angle = diff > 0.0 ? normalize_angle(0.5 * std::atan2(2.0 * sxy, sxx - syy)) : 0.0;
  return m;
}

}  // namespace manet::degradation
