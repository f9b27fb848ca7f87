// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/maconv.hpp"

#include <cmath>

#include "manet/ops.hpp"

namespace manet::model {

void MAConvConfig::validate() const {
  if (splits < 2) throw ArgumentError("MAConv split count must be >= 2, got " + std::to_string(splits));
  if (in_channels < 1 || out_channels < 1) throw ArgumentError("MAConv channel counts must be positive");
  if (in_channels % splits != 0 || out_channels % splits != 0) {
    throw ArgumentError("MAConv split count " + std::to_string(splits) + " must divide C_in=" +
                        std::to_string(in_channels) + " and C_out=" + std::to_string(out_channels));
  }
  if ((in_channels * (splits - 1)) % (2 * splits) != 0 || hidden() < 1) {
    throw ArgumentError("MAConv hidden width C_in(S-1)/(2S) is not a positive integer for C_in=" +
                        std::to_string(in_channels) + ", S=" + std::to_string(splits));
  }
}

std::int64_t maconv_param_formula(int in_channels, int out_channels, int splits) {
  const std::int64_t ci = in_channels;
  const std::int64_t co = out_channels;
  const std::int64_t s = splits;
  const std::int64_t a = 9 * ci * co;
  const std::int64_t b = (s * s - 1) * ci * ci;
  if (s < 1 || a % s != 0 || b % (2 * s) != 0) return -1;
  return a / s + b / (2 * s);
}

namespace {

template <typename T>
nn::Parameter<T> make_param(const std::string& name, nn::Shape shape) {
  return nn::Parameter<T>(name, nn::Tensor<T>(shape));
}

template <typename T>
void fill_uniform(nn::Tensor<T>& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-bound, bound);
  for (auto& v : t.data()) v = static_cast<T>(d(rng));
}

}  // namespace

template <typename T>
MAConvLayer<T>::MAConvLayer(const MAConvConfig& config, const std::string& name) : config_(config), name_(name) {
  config_.validate();
  const int s = config_.splits;
  const int ci = config_.split_in();
  const int co = config_.split_out();
  const int comp = config_.complement();
  const int hid = config_.hidden();
  splits_.reserve(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    const std::string p = name_ + ".split" + std::to_string(i) + ".";
    splits_.push_back(Split{
        make_param<T>(p + "fc1.weight", {hid, comp, 1, 1}), make_param<T>(p + "fc1.bias", {1, hid, 1, 1}),
        make_param<T>(p + "fc2.weight", {2 * ci, hid, 1, 1}), make_param<T>(p + "fc2.bias", {1, 2 * ci, 1, 1}),
        make_param<T>(p + "conv.weight", {co, ci, 3, 3}), make_param<T>(p + "conv.bias", {1, co, 1, 1})});
  }
}

template <typename T>
void MAConvLayer<T>::init(std::mt19937_64& rng) {
  const int ci = config_.split_in();
  for (auto& sp : splits_) {
    const double b1 = 1.0 / std::sqrt(static_cast<double>(config_.complement()));
    const double b2 = 1.0 / std::sqrt(static_cast<double>(config_.hidden()));
    const double b3 = 1.0 / std::sqrt(static_cast<double>(ci * 9));
    fill_uniform(sp.fc1_weight.value, b1, rng);
    fill_uniform(sp.fc1_bias.value, b1, rng);
    fill_uniform(sp.fc2_weight.value, b2, rng);
    fill_uniform(sp.fc2_bias.value, b2, rng);
    for (int c = 0; c < ci; ++c) sp.fc2_bias.value[static_cast<std::size_t>(c)] += T(1);
    fill_uniform(sp.conv_weight.value, b3, rng);
    fill_uniform(sp.conv_bias.value, b3, rng);
  }
  for (auto* p : params()) p->zero_grad();
}

template <typename T>
nn::Var<T> MAConvLayer<T>::forward(const nn::Var<T>& x, nn::Tape<T>* tape) {
  if (x.shape().c != config_.in_channels) {
    throw DimensionError(name_ + ": expected " + std::to_string(config_.in_channels) + " input channels, got " +
                         std::to_string(x.shape().c));
  }
  const int s = config_.splits;
  const auto parts = nn::split_channels(x, s);
  std::vector<nn::Var<T>> outputs;
  outputs.reserve(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    Split& sp = splits_[static_cast<std::size_t>(i)];
    std::vector<nn::Var<T>> others;
    for (int j = 0; j < s; ++j) {
      if (j != i) others.push_back(parts[static_cast<std::size_t>(j)]);
    }
    const auto comp = others.size() == 1 ? others.front() : nn::concat_channels(others);
    auto h = nn::relu(nn::conv2d(comp, nn::parameter(sp.fc1_weight, tape), nn::parameter(sp.fc1_bias, tape), 1, 0));
    auto f = nn::conv2d(h, nn::parameter(sp.fc2_weight, tape), nn::parameter(sp.fc2_bias, tape), 1, 0);
    const auto beta_gamma = nn::split_channels(f, 2);
    auto y = nn::add(nn::mul(beta_gamma[0], parts[static_cast<std::size_t>(i)]), beta_gamma[1]);
    outputs.push_back(nn::conv2d(y, nn::parameter(sp.conv_weight, tape), nn::parameter(sp.conv_bias, tape), 1, 1));
  }
  return nn::concat_channels(outputs);
}

template <typename T>
std::vector<nn::Parameter<T>*> MAConvLayer<T>::params() {
  std::vector<nn::Parameter<T>*> out;
  for (auto& sp : splits_) {
    out.insert(out.end(), {&sp.fc1_weight, &sp.fc1_bias, &sp.fc2_weight, &sp.fc2_bias, &sp.conv_weight, &sp.conv_bias});
  }
  return out;
}

template <typename T>
std::vector<const nn::Parameter<T>*> MAConvLayer<T>::params() const {
  std::vector<const nn::Parameter<T>*> out;
  for (auto& sp : splits_) {
    out.insert(out.end(), {&sp.fc1_weight, &sp.fc1_bias, &sp.fc2_weight, &sp.fc2_bias, &sp.conv_weight, &sp.conv_bias});
  }
  return out;
}

template <typename T>
std::int64_t MAConvLayer<T>::param_count(bool include_bias) const {
  std::int64_t n = 0;
  for (const auto& sp : splits_) {
    n += static_cast<std::int64_t>(sp.fc1_weight.value.size() + sp.fc2_weight.value.size() + sp.conv_weight.value.size());
    if (include_bias) {
      n += static_cast<std::int64_t>(sp.fc1_bias.value.size() + sp.fc2_bias.value.size() + sp.conv_bias.value.size());
    }
  }
  return n;
}

template <typename T>
std::int64_t MAConvLayer<T>::mac_count(std::int64_t hf, std::int64_t wf) const {
  return param_count(false) * hf * wf;
}

template class MAConvLayer<float>;
template class MAConvLayer<double>;

}  // namespace manet::model
