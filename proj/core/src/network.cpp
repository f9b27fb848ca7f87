// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/network.hpp"

#include <cmath>
#include <random>

#include "manet/ops.hpp"

namespace manet::model {

void MANetConfig::validate() const {
  if (in_channels != 1 && in_channels != 3) throw ArgumentError("input channels must be 1 or 3");
  for (int c : channels) {
    if (c < 1) throw ArgumentError("block channels must be positive");
  }
  if (channels[0] != channels[2]) {
    throw ArgumentError("first and last block channels must match for the additive skips, got " +
                        std::to_string(channels[0]) + " and " + std::to_string(channels[2]));
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ArgumentError("kernel size must be odd");
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  if (maconv_per_block < 1) throw ArgumentError("blocks need at least one MAConv layer");
  for (int c : channels) MAConvConfig{c, c, splits}.validate();
}

std::string MANetConfig::signature() const {
  return "in=" + std::to_string(in_channels) + " channels=" + std::to_string(channels[0]) + "," +
         std::to_string(channels[1]) + "," + std::to_string(channels[2]) + " S=" + std::to_string(splits) +
         " kernel=" + std::to_string(kernel_size) + " s=" + std::to_string(scale) +
         " depth=" + std::to_string(maconv_per_block);
}

template <typename T>
ResBlock<T>::ResBlock(int channels, int splits, int depth, const std::string& name) {
  layers_.reserve(static_cast<std::size_t>(depth));
  for (int i = 0; i < depth; ++i) {
    layers_.emplace_back(MAConvConfig{channels, channels, splits}, name + ".maconv" + std::to_string(i + 1));
  }
}

template <typename T>
nn::Var<T> ResBlock<T>::forward(const nn::Var<T>& x, nn::Tape<T>* tape) {
  nn::Var<T> h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i > 0) h = nn::relu(h);
    h = layers_[i].forward(h, tape);
  }
  return nn::add(x, h);
}

namespace {

template <typename T>
typename MANet<T>::Conv make_conv(const std::string& name, nn::Shape weight_shape, int bias_len) {
  return {nn::Parameter<T>(name + ".weight", nn::Tensor<T>(weight_shape)),
          nn::Parameter<T>(name + ".bias", nn::Tensor<T>(nn::Shape{1, bias_len, 1, 1}))};
}

template <typename T>
void init_conv(typename MANet<T>::Conv& conv, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> d(-bound, bound);
  for (auto& v : conv.weight.value.data()) v = static_cast<T>(d(rng));
  for (auto& v : conv.bias.value.data()) v = static_cast<T>(d(rng));
}

}  // namespace

template <typename T>
MANet<T>::MANet(const MANetConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const auto [c1, c2, c3] = config_.channels;
  const int depth = config_.maconv_per_block;
  head_ = make_conv<T>("head", {c1, config_.in_channels, 3, 3}, c1);
  down_ = make_conv<T>("down", {c2, c1, 2, 2}, c2);
  up_ = make_conv<T>("up", {c2, c3, 2, 2}, c3);
  tail_ = make_conv<T>("tail", {config_.taps(), c3, 3, 3}, config_.taps());
  blocks_[0] = ResBlock<T>(c1, config_.splits, depth, "block1");
  blocks_[1] = ResBlock<T>(c2, config_.splits, depth, "block2");
  blocks_[2] = ResBlock<T>(c3, config_.splits, depth, "block3");

  std::mt19937_64 rng(seed);
  init_conv<T>(head_, config_.in_channels * 9, rng);
  for (auto& l : blocks_[0].layers()) l.init(rng);
  init_conv<T>(down_, c1 * 4, rng);
  for (auto& l : blocks_[1].layers()) l.init(rng);
  init_conv<T>(up_, c2 * 4, rng);
  for (auto& l : blocks_[2].layers()) l.init(rng);
  init_conv<T>(tail_, c3 * 9, rng);
  for (auto* p : params()) p->zero_grad();
}

template <typename T>
nn::Var<T> MANet<T>::forward_logits(const nn::Var<T>& lr, nn::Tape<T>* tape) {
  const nn::Shape& s = lr.shape();
  if (s.c != config_.in_channels) {
    throw DimensionError("network expects " + std::to_string(config_.in_channels) + " input channels, got " +
                         std::to_string(s.c));
  }
  if (s.h < 1 || s.w < 1) throw DimensionError("empty LR input");
  nn::Var<T> x = lr;
  if (s.h % 2 != 0 || s.w % 2 != 0) x = nn::pad_replicate(x, s.h % 2, s.w % 2);

  auto bind = [&](Conv& c) { return std::pair{nn::parameter(c.weight, tape), nn::parameter(c.bias, tape)}; };
  auto [hw, hb] = bind(head_);
  const auto head = nn::conv2d(x, hw, hb, 1, 1);
  const auto b1 = blocks_[0].forward(head, tape);
  auto [dw, db] = bind(down_);
  const auto b2 = blocks_[1].forward(nn::conv2d(b1, dw, db, 2, 0), tape);
  auto [uw, ub] = bind(up_);
  const auto up = nn::add(nn::conv_transpose2d(b2, uw, ub, 2), b1);
  const auto b3 = nn::add(blocks_[2].forward(up, tape), head);
  auto [tw, tb] = bind(tail_);
  auto logits = nn::conv2d(b3, tw, tb, 1, 1);
  if (logits.shape().h != s.h || logits.shape().w != s.w) logits = nn::crop(logits, s.h, s.w);
  return logits;
}

template <typename T>
nn::Var<T> MANet<T>::forward(const nn::Var<T>& lr, nn::Tape<T>* tape) {
  return nn::nearest_upsample(nn::softmax_channels(forward_logits(lr, tape)), config_.scale);
}

template <typename T>
nn::Tensor<T> MANet<T>::estimate(const nn::Tensor<T>& lr) {
  return forward(nn::constant(lr)).value();
}

template <typename T>
std::vector<nn::Parameter<T>*> MANet<T>::params() {
  std::vector<nn::Parameter<T>*> out{&head_.weight, &head_.bias};
  auto append_block = [&](ResBlock<T>& b) {
    for (auto& l : b.layers()) {
      auto p = l.params();
      out.insert(out.end(), p.begin(), p.end());
    }
  };
  append_block(blocks_[0]);
  out.insert(out.end(), {&down_.weight, &down_.bias});
  append_block(blocks_[1]);
  out.insert(out.end(), {&up_.weight, &up_.bias});
  append_block(blocks_[2]);
  out.insert(out.end(), {&tail_.weight, &tail_.bias});
  return out;
}

template <typename T>
std::vector<const nn::Parameter<T>*> MANet<T>::params() const {
  auto mut = const_cast<MANet<T>*>(this)->params();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::int64_t MANet<T>::param_count(bool include_bias) const {
  std::int64_t n = 0;
  for (const auto* p : params()) {
    const bool is_bias = p->name.size() >= 5 && p->name.compare(p->name.size() - 5, 5, ".bias") == 0;
    if (include_bias || !is_bias) n += static_cast<std::int64_t>(p->value.size());
  }
  return n;
}

namespace {
constexpr int kMetaFields = 9;
}

template <typename T>
nn::TensorList<T> MANet<T>::state() const {
  nn::TensorList<T> out;
  for (const auto* p : params()) out.emplace_back(p->name, p->value);
  const auto& c = config_;
  out.emplace_back("meta.config",
                   nn::Tensor<T>(nn::Shape{1, 1, 1, kMetaFields},
                                 std::vector<T>{T(1), T(c.in_channels), T(c.channels[0]), T(c.channels[1]),
                                                T(c.channels[2]), T(c.splits), T(c.kernel_size), T(c.scale),
                                                T(c.maconv_per_block)}));
  out.emplace_back("meta.steps", nn::Tensor<T>(nn::Shape{1, 1, 1, 1}, std::vector<T>{T(trained_steps)}));
  return out;
}

template <typename T>
MANetConfig config_from_state(const nn::TensorList<T>& records) {
  for (const auto& [name, t] : records) {
    if (name != "meta.config") continue;
    if (t.size() != kMetaFields || t[0] != T(1)) throw StateError("unsupported network meta record");
    auto at = [&](std::size_t i) { return static_cast<int>(std::lround(static_cast<double>(t[i]))); };
    MANetConfig c;
    c.in_channels = at(1);
    c.channels = {at(2), at(3), at(4)};
    c.splits = at(5);
    c.kernel_size = at(6);
    c.scale = at(7);
    c.maconv_per_block = at(8);
    return c;
  }
  throw StateError("checkpoint has no meta.config record");
}

template <typename T>
void MANet<T>::load_state(const nn::TensorList<T>& records) {
  const MANetConfig stored = config_from_state(records);
  if (!(stored == config_)) {
    throw StateError("checkpoint config [" + stored.signature() + "] does not match network [" + config_.signature() +
                     "]");
  }
  std::map<std::string, const nn::Tensor<T>*> by_name;
  for (const auto& [name, t] : records) by_name[name] = &t;
  for (auto* p : params()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw StateError("checkpoint is missing parameter " + p->name);
    if (it->second->shape() != p->value.shape()) {
      throw StateError("parameter " + p->name + " has shape " + it->second->shape().str() + " in checkpoint, " +
                       p->value.shape().str() + " in network");
    }
    p->value = *it->second;
    p->zero_grad();
  }
  auto steps = by_name.find("meta.steps");
  trained_steps = steps == by_name.end() ? 0 : static_cast<std::int64_t>(std::llround((*steps->second)[0]));
}

template <typename T>
void MANet<T>::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, state());
}

template <typename T>
MANet<T> MANet<T>::load(const std::filesystem::path& path) {
  const auto records = nn::load_checkpoint<T>(path);
  MANet<T> net(config_from_state(records), 0);
  net.load_state(records);
  return net;
}

MANetConfig read_checkpoint_config(const std::filesystem::path& path) {
  return config_from_state(nn::load_checkpoint<double>(path));
}

template class ResBlock<float>;
template class ResBlock<double>;
template class MANet<float>;
template class MANet<double>;
template MANetConfig config_from_state<float>(const nn::TensorList<float>&);
template MANetConfig config_from_state<double>(const nn::TensorList<double>&);

}  // namespace manet::model
