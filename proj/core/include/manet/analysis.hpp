// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cost accounting, receptive field and patch-size probes for the network.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manet/degrade.hpp"
#include "manet/image.hpp"
#include "manet/kernel.hpp"
#include "manet/network.hpp"

namespace manet::model {

// ---------------------------------------------------------------------------
// Cost. One multiply-accumulate counts as one FLOP. A layer's MACs are its
// bias-free weight count times the number of output sites it is applied at.

struct LayerCost {
  std::string name;
  std::int64_t params = 0;           // with biases
  std::int64_t params_no_bias = 0;
  std::int64_t macs = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::int64_t feature_h = 0;
  std::int64_t feature_w = 0;

  std::int64_t params(bool include_bias) const;
  std::int64_t macs() const;
};

/// 9 C_in C_out
std::int64_t plain_conv_params(int in_channels, int out_channels);

/// Per-layer counts from the enumerated weight tensors.
template <typename T>
CostReport count_params(const MAConvLayer<T>& layer);
template <typename T>
CostReport count_params(const MANet<T>& net);

/// Closed-form counts; `feature_h` x `feature_w` is the map the layer runs on.
CostReport count_flops(const MAConvConfig& layer, std::int64_t feature_h, std::int64_t feature_w);
/// Whole network at an LR input of lr_h x lr_w (padded to even extents).
CostReport count_flops(const MANetConfig& config, std::int64_t lr_h, std::int64_t lr_w);

/// ((9/S) C_in C_out + (2(S-1)/S^2) C_in^2) H_f W_f as printed in the
/// literature. It undercounts the 1x1 branch, whose exact MAC count is
/// ((S^2-1)/(2S)) C_in^2 H_f W_f; kept for comparison only.
double maconv_published_flops(int in_channels, int out_channels, int splits, std::int64_t feature_h,
                              std::int64_t feature_w);

// ---------------------------------------------------------------------------
// Receptive field, in LR pixels.

struct Window {
  int lo = 0;  // inclusive offsets relative to the output site
  int hi = 0;
  int extent() const { return hi - lo + 1; }
};

/// Exact input window of the logit at LR coordinate `pos` along one axis,
/// following every path through the encoder-decoder. The window depends on
/// the parity of `pos` because of the stride-2 stages.
Window receptive_window(const MANetConfig& config, int pos);

/// Largest window extent over output parities, for rows and columns.
std::pair<int, int> receptive_field_analytic(const MANetConfig& config);

struct ProbeResult {
  int input_h = 0;
  int input_w = 0;
  int site_row = 0;
  int site_col = 0;
  Window analytic_rows;  // absolute input rows/cols of the analytic window
  Window analytic_cols;
  Window support_rows;   // bounding box of nonzero gradient
  Window support_cols;
  std::int64_t support_count = 0;
  std::vector<std::uint8_t> mask;  // input_h x input_w
  bool contained = false;          // support inside the analytic window
  bool low_coverage = false;       // support smaller than the analytic window
};

/// Gradient of logit channel 0 at an interior LR site with respect to a
/// strictly positive random input.
template <typename T>
ProbeResult receptive_field_probe(MANet<T>& net, std::uint64_t input_seed = 0);

/// Copy whose weights are |w| scaled so each output filter sums to one and
/// whose biases are |b|. Every unit stays active, which exposes the full
/// structural support to the probe.
template <typename T>
MANet<T> positive_weights_copy(const MANet<T>& net);

// ---------------------------------------------------------------------------
// Minimum patch probe.

enum class ProbeTarget { cross, corner };

struct PatchProbePoint {
  int size = 0;  // LR extent of the structured patch
  double psnr = 0.0;
  double ssim = 0.0;
  degradation::Kernel estimate;
};

struct PatchProbeResult {
  std::vector<PatchProbePoint> curve;
  bool trained = false;
};

/// HR image of size*scale pixels per side: a bright cross (or corner) with
/// bars one LR pixel wide on a dark background.
degradation::Image probe_pattern(ProbeTarget target, int size, int scale);

/// For every size, degrades the pattern with `truth`, estimates the kernel at
/// the centre pixel, and scores that kernel by lr_fidelity on `reference`
/// (whose clean LR is synthesized with `truth`).
template <typename T>
PatchProbeResult min_patch_probe(MANet<T>& net, const std::vector<int>& sizes, const degradation::KernelParams& truth,
                                 const degradation::Image& reference, ProbeTarget target = ProbeTarget::cross);

/// Dense HR kernel map for an LR image: channel softmax at every LR site,
/// replicated over its s x s block.
template <typename T>
degradation::KernelMap estimate_kernel_map(MANet<T>& net, const degradation::Image& lr);

/// Kernel predicted at LR site (row, col) of `lr`.
template <typename T>
degradation::Kernel kernel_at_site(MANet<T>& net, const degradation::Image& lr, int row, int col);

}  // namespace manet::model
