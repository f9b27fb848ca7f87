// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "manet/autograd.hpp"

namespace manet::nn {

/// Nominal multiply-accumulate count of convolutions executed on this thread.
/// Every tap of every output site counts once, including zero-padded taps.
std::uint64_t& mac_counter();

/// Cross-correlation with zero padding. `weight` is C_out x C_in x k x k and
/// `bias`, when defined, holds C_out values in any shape.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride, int pad);

/// Adjoint of conv2d without padding. `weight` is C_in x C_out x k x k in the
/// sense of this op's own input/output, i.e. the same tensor the matching
/// conv2d would use. Output extent is (H - 1) * stride + k.
template <typename T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride);

template <typename T>
Var<T> relu(const Var<T>& input);

/// Softmax across channels at every (n, h, w) site.
template <typename T>
Var<T> softmax_channels(const Var<T>& input);

/// Replicates each pixel into a factor x factor block.
template <typename T>
Var<T> nearest_upsample(const Var<T>& input, int factor);

/// Splits channels into `parts` equal consecutive groups.
template <typename T>
std::vector<Var<T>> split_channels(const Var<T>& input, int parts);

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

/// Elementwise product.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

/// Sum of all elements, as a 1x1x1x1 tensor.
template <typename T>
Var<T> sum(const Var<T>& input);

/// Extends the bottom and right edges by repeating the last row/column.
template <typename T>
Var<T> pad_replicate(const Var<T>& input, int bottom, int right);

/// Keeps the top-left height x width window.
template <typename T>
Var<T> crop(const Var<T>& input, int height, int width);

/// Sum over every element of |a - b|, divided by `divisor`.
template <typename T>
Var<T> l1_distance(const Var<T>& a, const Var<T>& b, double divisor);

}  // namespace manet::nn
