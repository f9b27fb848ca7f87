// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "manet/metrics.hpp"
#include "manet/ops.hpp"

namespace manet::model {

namespace dg = manet::degradation;

std::int64_t CostReport::params(bool include_bias) const {
  std::int64_t n = 0;
  for (const auto& l : layers) n += include_bias ? l.params : l.params_no_bias;
  return n;
}

std::int64_t CostReport::macs() const {
  std::int64_t n = 0;
  for (const auto& l : layers) n += l.macs;
  return n;
}

std::int64_t plain_conv_params(int in_channels, int out_channels) {
  return 9 * static_cast<std::int64_t>(in_channels) * out_channels;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <typename T>
CostReport enumerate(const std::vector<const nn::Parameter<T>*>& params) {
  CostReport r;
  std::map<std::string, std::size_t> index;
  for (const auto* p : params) {
    const bool bias = ends_with(p->name, ".bias");
    const std::string layer = p->name.substr(0, p->name.rfind('.'));
    auto [it, fresh] = index.emplace(layer, r.layers.size());
    if (fresh) r.layers.push_back(LayerCost{layer});
    LayerCost& l = r.layers[it->second];
    const auto n = static_cast<std::int64_t>(p->value.size());
    l.params += n;
    if (!bias) l.params_no_bias += n;
  }
  return r;
}

LayerCost conv_cost(const std::string& name, std::int64_t cin, std::int64_t cout, std::int64_t k, std::int64_t sites) {
  const std::int64_t w = cin * cout * k * k;
  return {name, w + cout, w, w * sites};
}

void append_maconv(CostReport& r, const std::string& name, const MAConvConfig& c, std::int64_t sites) {
  c.validate();
  for (int i = 0; i < c.splits; ++i) {
    const std::string p = name + ".split" + std::to_string(i) + ".";
    r.layers.push_back(conv_cost(p + "fc1", c.complement(), c.hidden(), 1, sites));
    r.layers.push_back(conv_cost(p + "fc2", c.hidden(), 2 * c.split_in(), 1, sites));
    r.layers.push_back(conv_cost(p + "conv", c.split_in(), c.split_out(), 3, sites));
  }
}

}  // namespace

template <typename T>
CostReport count_params(const MAConvLayer<T>& layer) {
  return enumerate<T>(layer.params());
}

template <typename T>
CostReport count_params(const MANet<T>& net) {
  return enumerate<T>(net.params());
}

CostReport count_flops(const MAConvConfig& layer, std::int64_t feature_h, std::int64_t feature_w) {
  CostReport r;
  r.feature_h = feature_h;
  r.feature_w = feature_w;
  append_maconv(r, "maconv", layer, feature_h * feature_w);
  return r;
}

CostReport count_flops(const MANetConfig& config, std::int64_t lr_h, std::int64_t lr_w) {
  config.validate();
  const std::int64_t h = lr_h + lr_h % 2;
  const std::int64_t w = lr_w + lr_w % 2;
  const std::int64_t full = h * w;
  const std::int64_t half = (h / 2) * (w / 2);
  const auto [c1, c2, c3] = config.channels;
  CostReport r;
  r.feature_h = lr_h;
  r.feature_w = lr_w;
  auto block = [&](const std::string& name, int c, std::int64_t sites) {
    for (int i = 0; i < config.maconv_per_block; ++i) {
      append_maconv(r, name + ".maconv" + std::to_string(i + 1), MAConvConfig{c, c, config.splits}, sites);
    }
  };
  r.layers.push_back(conv_cost("head", config.in_channels, c1, 3, full));
  block("block1", c1, full);
  r.layers.push_back(conv_cost("down", c1, c2, 2, half));
  block("block2", c2, half);
  // The transposed conv does one MAC per weight per input site.
  LayerCost up = conv_cost("up", c2, c3, 2, half);
  up.params = up.params_no_bias + c3;
  r.layers.push_back(up);
  block("block3", c3, full);
  r.layers.push_back(conv_cost("tail", c3, config.taps(), 3, full));
  return r;
}

double maconv_published_flops(int in_channels, int out_channels, int splits, std::int64_t feature_h,
                              std::int64_t feature_w) {
  const double s = splits;
  const double ci = in_channels;
  const double co = out_channels;
  return (9.0 / s * ci * co + 2.0 * (s - 1.0) / (s * s) * ci * ci) * static_cast<double>(feature_h * feature_w);
}

namespace {

struct Span {
  long lo;
  long hi;
};

Span grow(Span s, long r) { return {s.lo - r, s.hi + r}; }
Span hull(Span a, Span b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }
long floor_div2(long v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

}  // namespace

Window receptive_window(const MANetConfig& config, int pos) {
  config.validate();
  const long depth = config.maconv_per_block;  // each MAConv adds one 3x3 conv
  const Span pre_tail = grow({pos, pos}, 1);
  // pre_tail = block3(up) + head
  const Span up = grow(pre_tail, depth);
  // up = convT(block2(down(block1))) + block1; the 2x2 stride-2 transposed conv maps q <- q / 2
  const Span b2_out = {floor_div2(up.lo), floor_div2(up.hi)};
  const Span down_out = grow(b2_out, depth);
  const Span b1_from_down = {2 * down_out.lo, 2 * down_out.hi + 1};
  const Span b1_out = hull(up, b1_from_down);
  const Span head_out = hull(pre_tail, grow(b1_out, depth));
  const Span input = grow(head_out, 1);
  return {static_cast<int>(input.lo - pos), static_cast<int>(input.hi - pos)};
}

std::pair<int, int> receptive_field_analytic(const MANetConfig& config) {
  const int e = std::max(receptive_window(config, 0).extent(), receptive_window(config, 1).extent());
  return {e, e};
}

template <typename T>
MANet<T> positive_weights_copy(const MANet<T>& net) {
  MANet<T> out = net.template cast<T>();
  for (auto* p : out.params()) {
    auto& v = p->value;
    if (ends_with(p->name, ".bias")) {
      for (auto& x : v.data()) x = std::abs(x);
      continue;
    }
    const std::size_t per_filter = v.size() / static_cast<std::size_t>(v.shape().n);
    for (int f = 0; f < v.shape().n; ++f) {
      T* w = v.raw() + static_cast<std::size_t>(f) * per_filter;
      T total = 0;
      for (std::size_t i = 0; i < per_filter; ++i) total += std::abs(w[i]);
      for (std::size_t i = 0; i < per_filter; ++i) w[i] = total > 0 ? std::abs(w[i]) / total : T(1) / T(per_filter);
    }
  }
  return out;
}

template <typename T>
ProbeResult receptive_field_probe(MANet<T>& net, std::uint64_t input_seed) {
  const MANetConfig& cfg = net.config();
  ProbeResult r;
  // Smallest even extent whose centre site keeps the whole window one pixel
  // clear of the zero padding.
  int extent = 4;
  for (;; extent += 2) {
    const int site = extent / 2;
    const Window w = receptive_window(cfg, site);
    if (site + w.lo >= 1 && site + w.hi <= extent - 2) break;
  }
  r.input_h = r.input_w = extent;
  r.site_row = r.site_col = extent / 2;
  const Window w = receptive_window(cfg, r.site_row);
  r.analytic_rows = {r.site_row + w.lo, r.site_row + w.hi};
  r.analytic_cols = {r.site_col + w.lo, r.site_col + w.hi};

  std::mt19937_64 rng(input_seed);
  std::uniform_real_distribution<double> d(0.1, 1.0);
  nn::Tensor<T> x(nn::Shape{1, cfg.in_channels, extent, extent});
  for (auto& v : x.data()) v = static_cast<T>(d(rng));

  nn::Tape<T> tape;
  const auto input = nn::leaf(x, tape);
  const auto logits = net.forward_logits(input, &tape);
  nn::Tensor<T> pick(logits.shape());
  pick.at(0, 0, r.site_row, r.site_col) = T(1);
  const auto out = nn::sum(nn::mul(logits, nn::constant(pick, &tape)));
  tape.backward(out);
  for (auto* p : net.params()) p->zero_grad();

  const auto g = input.grad();
  r.mask.assign(static_cast<std::size_t>(extent) * extent, 0);
  r.support_rows = {extent, -1};
  r.support_cols = {extent, -1};
  r.contained = true;
  for (int c = 0; c < cfg.in_channels; ++c) {
    for (int i = 0; i < extent; ++i) {
      for (int j = 0; j < extent; ++j) {
        if (g.at(0, c, i, j) == T(0)) continue;
        r.mask[static_cast<std::size_t>(i) * extent + j] = 1;
      }
    }
  }
  for (int i = 0; i < extent; ++i) {
    for (int j = 0; j < extent; ++j) {
      if (!r.mask[static_cast<std::size_t>(i) * extent + j]) continue;
      ++r.support_count;
      r.support_rows = {std::min(r.support_rows.lo, i), std::max(r.support_rows.hi, i)};
      r.support_cols = {std::min(r.support_cols.lo, j), std::max(r.support_cols.hi, j)};
      if (i < r.analytic_rows.lo || i > r.analytic_rows.hi || j < r.analytic_cols.lo || j > r.analytic_cols.hi) {
        r.contained = false;
      }
    }
  }
  const std::int64_t full = static_cast<std::int64_t>(r.analytic_rows.extent()) * r.analytic_cols.extent();
  r.low_coverage = r.support_count < full;
  return r;
}

namespace {

// Pattern on a canvas of `extent` HR pixels whose centre pixel is `centre`.
dg::Image pattern_canvas(ProbeTarget target, int extent, int centre, int scale) {
  constexpr double background = 0.2;
  constexpr double foreground = 0.8;
  dg::Image img(1, extent, extent, background);
  const int lo = centre - scale / 2;
  const int hi = lo + std::max(1, scale);
  for (int i = 0; i < extent; ++i) {
    for (int j = 0; j < extent; ++j) {
      const bool on = target == ProbeTarget::cross ? ((i >= lo && i < hi) || (j >= lo && j < hi))
                                                   : (i >= centre && j >= centre);
      if (on) img.at(0, i, j) = foreground;
    }
  }
  return img;
}

}  // namespace

dg::Image probe_pattern(ProbeTarget target, int size, int scale) {
  if (size < 1 || scale < 1) throw ArgumentError("probe pattern size and scale must be positive");
  const int extent = size * scale;
  return pattern_canvas(target, extent, extent / 2, scale);
}

template <typename T>
dg::Kernel kernel_at_site(MANet<T>& net, const dg::Image& lr, int row, int col) {
  if (row < 0 || col < 0 || row >= lr.height || col >= lr.width) throw DimensionError("kernel site outside image");
  const auto logits = net.forward_logits(nn::constant(dg::to_tensor<T>(lr))).value();
  const int taps = net.config().taps();
  std::vector<double> z(static_cast<std::size_t>(taps));
  double mx = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < taps; ++t) {
    z[static_cast<std::size_t>(t)] = static_cast<double>(logits.at(0, t, row, col));
    mx = std::max(mx, z[static_cast<std::size_t>(t)]);
  }
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : z) v /= total;
  return dg::Kernel{net.config().kernel_size, std::move(z)};
}

template <typename T>
dg::KernelMap estimate_kernel_map(MANet<T>& net, const dg::Image& lr) {
  const int s = net.config().scale;
  const auto logits = net.forward_logits(nn::constant(dg::to_tensor<T>(lr))).value();
  const int taps = net.config().taps();
  dg::KernelMap map(net.config().kernel_size, lr.height * s, lr.width * s);
  std::vector<double> z(static_cast<std::size_t>(taps));
  for (int i = 0; i < lr.height; ++i) {
    for (int j = 0; j < lr.width; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < taps; ++t) {
        z[static_cast<std::size_t>(t)] = static_cast<double>(logits.at(0, t, i, j));
        mx = std::max(mx, z[static_cast<std::size_t>(t)]);
      }
      double total = 0.0;
      for (double& v : z) {
        v = std::exp(v - mx);
        total += v;
      }
      for (int t = 0; t < taps; ++t) {
        const double v = z[static_cast<std::size_t>(t)] / total;
        for (int a = 0; a < s; ++a) {
          double* row = &map.at(t, i * s + a, j * s);
          std::fill(row, row + s, v);
        }
      }
    }
  }
  return map;
}

template <typename T>
PatchProbeResult min_patch_probe(MANet<T>& net, const std::vector<int>& sizes, const dg::KernelParams& truth,
                                 const dg::Image& reference, ProbeTarget target) {
  const MANetConfig& cfg = net.config();
  const int s = cfg.scale;
  if (net.config().in_channels != 1) throw ArgumentError("patch probe runs on single-channel networks");
  const dg::Kernel k_true = dg::synth_kernel(truth, cfg.kernel_size);
  const dg::Image ref = dg::crop_to_multiple(dg::to_gray(reference), s);
  const dg::Image ref_lr = dg::reblur_decimate(ref, dg::KernelMap::broadcast(k_true, ref.height, ref.width), s);

  PatchProbeResult result;
  result.trained = net.trained_steps > 0;
  for (int n : sizes) {
    if (n < 1) throw ArgumentError("patch sizes must be positive");
    // Blur on a canvas wide enough that the patch never sees the blur border.
    const int margin = ((cfg.kernel_size / 2 + s - 1) / s) * s;
    const int extent = n * s + 2 * margin;
    const dg::Image canvas = pattern_canvas(target, extent, margin + (n * s) / 2, s);
    const dg::Image blurred = dg::blur_invariant(canvas, k_true);
    const dg::Image lr = dg::decimate(dg::crop(blurred, margin, margin, n * s, n * s), s);
    const int site = ((n * s) / 2) / s;
    PatchProbePoint p;
    p.size = n;
    p.estimate = kernel_at_site(net, lr, site, site);
    const auto fid = dg::lr_fidelity(ref, ref_lr, dg::KernelMap::broadcast(p.estimate, ref.height, ref.width), s);
    p.psnr = fid.psnr;
    p.ssim = fid.ssim;
    result.curve.push_back(std::move(p));
  }
  return result;
}

#define MANET_INSTANTIATE(T)                                                                                  \
  template CostReport count_params<T>(const MAConvLayer<T>&);                                                 \
  template CostReport count_params<T>(const MANet<T>&);                                                       \
  template MANet<T> positive_weights_copy<T>(const MANet<T>&);                                                \
  template ProbeResult receptive_field_probe<T>(MANet<T>&, std::uint64_t);                                    \
  template dg::KernelMap estimate_kernel_map<T>(MANet<T>&, const dg::Image&);                                 \
  template dg::Kernel kernel_at_site<T>(MANet<T>&, const dg::Image&, int, int);                               \
  template PatchProbeResult min_patch_probe<T>(MANet<T>&, const std::vector<int>&, const dg::KernelParams&, \
                                               const dg::Image&, ProbeTarget);
MANET_INSTANTIATE(float)
MANET_INSTANTIATE(double)
#undef MANET_INSTANTIATE

}  // namespace manet::model
