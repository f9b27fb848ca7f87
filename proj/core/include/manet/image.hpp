// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "manet/error.hpp"
#include "manet/tensor.hpp"

namespace manet::degradation {

enum class ImageRole { HR, LR };

/// Planar floating-point raster, nominally in [0, 1]. Values are only clamped
/// when exported.
struct Image {
  int channels = 1;
  int height = 0;
  int width = 0;
  ImageRole role = ImageRole::HR;
  int scale = 1;  // HR/LR factor; meaningful for LR images
  std::vector<double> data;

  Image() = default;
  Image(int c, int h, int w, double fill = 0.0);

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int i, int j) { return data[c * plane() + static_cast<std::size_t>(i) * width + j]; }
  double at(int c, int i, int j) const { return data[c * plane() + static_cast<std::size_t>(i) * width + j]; }
  bool same_extent(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  std::string extent_str() const;
};

/// Luma (BT.601) of a 3-channel image; 1-channel images are returned as is.
Image to_gray(const Image& img);

/// Top/left aligned sub-image.
Image crop(const Image& img, int top, int left, int height, int width);

/// Crops bottom/right so both extents are multiples of `multiple`.
Image crop_to_multiple(const Image& img, int multiple);

/// Binary PGM (P5). maxval up to 255 is accepted on read; writes are 8-bit.
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Image& img);

/// One batch item as a 1 x C x H x W tensor and back.
template <typename T>
nn::Tensor<T> to_tensor(const Image& img);
template <typename T>
Image from_tensor(const nn::Tensor<T>& t, int n = 0);

}  // namespace manet::degradation
