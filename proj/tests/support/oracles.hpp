// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Straightforward reference implementations used as test oracles. These are
// written for clarity, not speed, and share no code with the library kernels.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "manet/image.hpp"
#include "manet/kernel.hpp"
#include "manet/tensor.hpp"

namespace oracle {

using manet::nn::Shape;
using manet::nn::Tensor;

Tensor<double> random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

/// Six nested loops, zero padding.
Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& w, const std::vector<double>& bias, int stride,
                      int pad);

/// Scatter form of the transposed convolution, weight C_in x C_out x k x k.
Tensor<double> conv_transpose2d(const Tensor<double>& x, const Tensor<double>& w, int stride);

/// Grouped 3x3 convolution with padding 1: group g maps input channels
/// [g Ci/G, (g+1) Ci/G) to output channels [g Co/G, (g+1) Co/G).
Tensor<double> grouped_conv3x3(const Tensor<double>& x, const std::vector<Tensor<double>>& group_weights,
                               const std::vector<std::vector<double>>& group_bias);

double inner(const Tensor<double>& a, const Tensor<double>& b);

/// Reflect (no edge repeat) index by explicit mirror table.
int mirror(int i, int n);

/// out(i, j) = sum_{a,b} k(a, b) * img(i - a + r, j - b + r), reflect border.
manet::degradation::Image convolve(const manet::degradation::Image& img, const manet::degradation::Kernel& k);

/// out(i, j) = sum_{a,b} k_ij(a, b) * img(i + a - r, j + b - r), reflect border.
manet::degradation::Image correlate_per_pixel(const manet::degradation::Image& img,
                                              const std::vector<manet::degradation::Kernel>& kernels,
                                              const std::vector<int>& kernel_of_pixel);

double psnr(const manet::degradation::Image& a, const manet::degradation::Image& b);

/// SSIM by explicit 11x11 windows; every window's statistics computed from
/// scratch with 2-D Gaussian weights.
double ssim(const manet::degradation::Image& a, const manet::degradation::Image& b);

/// sum_{n,h,w} sum_t |a - b| / (N H W) with flat loops.
double kernel_l1(const Tensor<double>& a, const Tensor<double>& b);

}  // namespace oracle
