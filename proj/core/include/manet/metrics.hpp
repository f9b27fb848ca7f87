// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "manet/degrade.hpp"
#include "manet/image.hpp"

namespace manet::degradation {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) over all channels, capped at 100 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over all valid 11 x 11 Gaussian windows (sigma 1.5, K1 0.01,
/// K2 0.03, dynamic range 1), averaged over channels. Images smaller than the
/// window use a window truncated to the image.
double ssim(const Image& a, const Image& b);

struct Fidelity {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Blurs `hr` with the per-pixel kernels of `map` at the decimated sites only.
/// Equals decimate(blur_with_map(hr, map), scale).
Image reblur_decimate(const Image& hr, const KernelMap& map, int scale);

/// LR sites whose HR position lies at least `border` pixels from every edge.
struct CropWindow {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};
CropWindow fidelity_window(int hr_height, int hr_width, int scale, int border);

/// Re-synthesizes the LR image from `hr` and `est`, crops an HR-scale border
/// of half the kernel support (11 px for 21 x 21 kernels) and compares with
/// the noise-free observation `lr_clean`.
Fidelity lr_fidelity(const Image& hr, const Image& lr_clean, const KernelMap& est, int scale);

}  // namespace manet::degradation
