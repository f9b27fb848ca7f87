// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Grayscale renderings of kernels and kernel maps.

#pragma once

#include <utility>
#include <vector>

#include "manet/degrade.hpp"
#include "manet/image.hpp"
#include "manet/kernel.hpp"

namespace manet::degradation {

/// Kernel taps divided by the largest tap (max tap -> 1), each tap drawn as a
/// zoom x zoom block.
Image render_kernel(const Kernel& k, int zoom = 1);

/// Up to grid x grid LR sites, evenly spread over [margin, extent - 1 - margin]
/// and snapped to even coordinates. The margin shrinks when the image is too
/// small for it.
std::vector<std::pair<int, int>> montage_sites(int lr_height, int lr_width, int grid, int margin);

/// The LR image upscaled by nearest neighbour with the kernel of each listed
/// LR site rendered on top, centred on the site's HR block. `map` is at HR
/// extent.
Image kernel_montage(const Image& lr, const KernelMap& map, int scale, const std::vector<std::pair<int, int>>& sites,
                     int zoom = 1);

}  // namespace manet::degradation
