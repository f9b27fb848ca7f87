// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// HR -> LR degradation: blur (invariant or per-pixel), decimation, noise.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "manet/image.hpp"
#include "manet/kernel.hpp"
#include "manet/tensor.hpp"

namespace manet::degradation {

/// Dense per-pixel kernels: taps x height x width with the taps of one site
/// laid out row-major over the kernel window.
struct KernelMap {
  int kernel_size = kDefaultKernelSize;
  int height = 0;
  int width = 0;
  std::vector<double> taps;

  KernelMap() = default;
  KernelMap(int kernel_size, int height, int width);

  int taps_per_site() const { return kernel_size * kernel_size; }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  double at(int tap, int i, int j) const { return taps[tap * plane() + static_cast<std::size_t>(i) * width + j]; }
  double& at(int tap, int i, int j) { return taps[tap * plane() + static_cast<std::size_t>(i) * width + j]; }

  Kernel kernel_at(int i, int j) const;
  void set_kernel(int i, int j, const Kernel& k);

  static KernelMap broadcast(const Kernel& k, int height, int width);
  static KernelMap from_field(const KernelField& field, int kernel_size = kDefaultKernelSize);

  /// Reads batch item `n` of a (N, taps, H, W) tensor.
  template <typename T>
  static KernelMap from_tensor(const nn::Tensor<T>& t, int n = 0);
  template <typename T>
  nn::Tensor<T> to_tensor() const;
};

struct DegradationConfig {
  int scale = 4;
  double noise_sigma = 0.0;  // 0..255 units
  std::uint64_t seed = 0;
  int kernel_size = kDefaultKernelSize;
};

struct Degraded {
  Image lr;        // observed, with noise
  Image lr_clean;  // noise-free
  KernelMap gt;    // per-HR-pixel kernels
};

/// Mirror index without repeating the edge sample (..., 2, 1 | 0, 1, 2, ...).
int reflect_index(int i, int n);

/// True convolution with reflect padding; output extent equals input extent.
Image blur_invariant(const Image& img, const Kernel& k);

/// Each output pixel is the inner product of its patch's kernel with the
/// reflect-padded neighbourhood centred on it.
Image blur_variant(const Image& img, const KernelField& field, int kernel_size = kDefaultKernelSize);

/// Same inner-product rule with an explicit kernel per pixel.
Image blur_with_map(const Image& img, const KernelMap& map);

/// Keeps pixel (0, 0) of every s x s block.
Image decimate(const Image& img, int scale);

/// Adds i.i.d. N(0, (sigma / 255)^2) noise.
Image add_noise(const Image& img, double sigma, std::mt19937_64& rng);

/// blur_variant -> decimate -> add_noise, plus the ground-truth kernel map.
Degraded degrade(const Image& hr, const KernelField& field, const DegradationConfig& cfg);

/// Writes `map` as a (taps, H, W) tensor container. A plain-text sidecar
/// `<path>.meta` receives `meta` as key=value lines.
void save_kernel_map(const std::filesystem::path& path, const KernelMap& map,
                     const std::vector<std::pair<std::string, std::string>>& meta = {});
KernelMap load_kernel_map(const std::filesystem::path& path);

/// Writes a field as a (3, rows, cols) tensor of (sigma1, sigma2, theta) with a
/// sidecar holding field_type, s, patch_size, seed and the HR extent.
void save_kernel_field(const std::filesystem::path& path, const KernelField& field);
KernelField load_kernel_field(const std::filesystem::path& path);

}  // namespace manet::degradation
