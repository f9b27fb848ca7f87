// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Anisotropic Gaussian blur kernels and spatially variant kernel fields.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "manet/error.hpp"

namespace manet::degradation {

inline constexpr int kDefaultKernelSize = 21;

/// Continuous Gaussian parameters in HR pixel units. theta = 0 aligns sigma1
/// with the horizontal (column) axis; the angle is stored modulo pi.
struct KernelParams {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double theta = 0.0;

  /// Validates the widths and folds theta into [0, pi).
  static KernelParams make(double sigma1, double sigma2, double theta);
};

double normalize_angle(double theta);

/// size x size taps, row-major, nonnegative and summing to one.
struct Kernel {
  int size = 0;
  std::vector<double> taps;

  double at(int row, int col) const { return taps[static_cast<std::size_t>(row) * size + col]; }
  int radius() const { return size / 2; }
};

/// Samples the Gaussian density at integer offsets from the centre tap and
/// normalizes. Widths below 1e-3 are floored when inverting the covariance.
Kernel synth_kernel(const KernelParams& p, int size = kDefaultKernelSize);

/// sigma1, sigma2 ~ U(0.175 s, 2.5 s), theta ~ U(0, pi).
KernelParams sample_training_params(std::mt19937_64& rng, int scale);

/// The nine evaluation kernels for scale 2, 3 or 4: the six width pairs with
/// sigma1 >= sigma2 at theta = 0 plus the three strictly anisotropic pairs at
/// theta = pi/4.
std::vector<KernelParams> eval_kernel_grid(int scale);

/// Width range a = 2.325 s and minimum width b = 0.175 s of the variant fields.
struct FieldWidths {
  double range;
  double minimum;
};
FieldWidths field_widths(int scale);

/// Per-patch Gaussian parameters over an HR grid. Patches are square,
/// anchored at the top-left; the last row/column of patches may be partial.
struct KernelField {
  int height = 0;
  int width = 0;
  int patch_size = 40;
  int rows = 0;
  int cols = 0;
  int field_type = 0;  // 0 = constant, 1..5 = the variant families
  int scale = 1;
  std::uint64_t seed = 0;
  std::vector<KernelParams> patches;  // rows x cols, row-major

  const KernelParams& patch(int row, int col) const {
    return patches[static_cast<std::size_t>(row) * cols + col];
  }
  std::size_t patch_index_of(int i, int j) const {
    return static_cast<std::size_t>(i / patch_size) * cols + static_cast<std::size_t>(j / patch_size);
  }
  const KernelParams& at_pixel(int i, int j) const { return patches[patch_index_of(i, j)]; }
};

/// Every patch shares `params`.
KernelField constant_field(const KernelParams& params, int height, int width, int patch_size = 40, int scale = 1);

/// Variant kernel families 1..5. With a = 2.325 s, b = 0.175 s and patch
/// coordinates x = col / (cols - 1), y = row / (rows - 1) (0 for a single
/// patch along an axis):
///   1: sigma1 = a + b,     sigma2 = a x + b, theta = 0
///   2: sigma1 = a y + b,   sigma2 = a x + b, theta = 0
///   3: sigma1 = a + b,     sigma2 = b,       theta = pi x
///   4: sigma1 = a y + b,   sigma2 = a x + b, theta = pi x
///   5: sigma1, sigma2 ~ U(b, a + b), theta ~ U(0, pi), drawn per patch in
///      row-major order from `rng`.
KernelField make_kernel_field(int field_type, int height, int width, int patch_size, int scale,
                              std::mt19937_64& rng);

}  // namespace manet::degradation

namespace manet::degradation {

/// Eigen-decomposition of the tap-weighted second-moment matrix about the
/// centre tap. `angle` is the direction of the major axis in [0, pi), measured
/// like theta (from the column axis towards increasing rows).
struct KernelMoments {
  double major = 0.0;
  double minor = 0.0;
  double angle = 0.0;
};
KernelMoments kernel_moments(const Kernel& k);

}  // namespace manet::degradation
