// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/render.hpp"

#include <algorithm>

namespace manet::degradation {

Image render_kernel(const Kernel& k, int zoom) {
  if (zoom < 1) throw ArgumentError("zoom must be positive");
  if (k.size < 1 || k.taps.size() != static_cast<std::size_t>(k.size) * k.size) {
    throw ArgumentError("malformed kernel");
  }
  const double peak = *std::max_element(k.taps.begin(), k.taps.end());
  const double inv = peak > 0.0 ? 1.0 / peak : 0.0;
  Image out(1, k.size * zoom, k.size * zoom);
  for (int i = 0; i < out.height; ++i) {
    for (int j = 0; j < out.width; ++j) out.at(0, i, j) = k.at(i / zoom, j / zoom) * inv;
  }
  return out;
}

std::vector<std::pair<int, int>> montage_sites(int lr_height, int lr_width, int grid, int margin) {
  if (grid < 1) throw ArgumentError("montage grid must be positive");
  if (lr_height < 1 || lr_width < 1) throw ArgumentError("montage needs a non-empty image");
  auto axis = [&](int extent) {
    int m = std::max(0, margin);
    while (m > 0 && extent - 1 - 2 * m < 0) --m;
    const int lo = m;
    const int hi = extent - 1 - m;
    std::vector<int> pos;
    for (int g = 0; g < grid; ++g) {
      const int p = grid == 1 ? (lo + hi) / 2 : lo + (hi - lo) * g / (grid - 1);
      int even = p - p % 2;
      if (even < lo && even + 2 <= hi) even += 2;
      if (pos.empty() || pos.back() != even) pos.push_back(even);
    }
    return pos;
  };
  std::vector<std::pair<int, int>> sites;
  for (int r : axis(lr_height)) {
    for (int c : axis(lr_width)) sites.emplace_back(r, c);
  }
  return sites;
}

Image kernel_montage(const Image& lr, const KernelMap& map, int scale, const std::vector<std::pair<int, int>>& sites,
                     int zoom) {
  if (scale < 1) throw ArgumentError("scale must be positive");
  if (map.height != lr.height * scale || map.width != lr.width * scale) {
    throw DimensionError("kernel map " + std::to_string(map.height) + "x" + std::to_string(map.width) +
                         " does not match LR " + lr.extent_str() + " at scale " + std::to_string(scale));
  }
  const Image gray = to_gray(lr);
  Image out(1, map.height, map.width);
  for (int i = 0; i < out.height; ++i) {
    for (int j = 0; j < out.width; ++j) out.at(0, i, j) = gray.at(0, i / scale, j / scale);
  }
  for (const auto& [r, c] : sites) {
    if (r < 0 || r >= lr.height || c < 0 || c >= lr.width) throw ArgumentError("montage site outside the image");
    const int hr_r = r * scale + scale / 2;
    const int hr_c = c * scale + scale / 2;
    const Image tile = render_kernel(map.kernel_at(hr_r, hr_c), zoom);
    const int top = hr_r - tile.height / 2;
    const int left = hr_c - tile.width / 2;
    for (int i = 0; i < tile.height; ++i) {
      for (int j = 0; j < tile.width; ++j) {
        const int y = top + i;
        const int x = left + j;
        if (y >= 0 && y < out.height && x >= 0 && x < out.width) out.at(0, y, x) = tile.at(0, i, j);
      }
    }
  }
  return out;
}

}  // namespace manet::degradation
