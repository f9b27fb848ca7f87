// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Mutual affine convolution.
//
// The input is split into S channel groups. For group i the remaining groups,
// concatenated in ascending order, pass through two 1x1 convolutions with a
// ReLU between them; the result is halved into a per-pixel scale beta_i and
// shift gamma_i. Group i becomes beta_i * x_i + gamma_i, goes through its own
// 3x3 convolution, and the S results are concatenated.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "manet/autograd.hpp"

namespace manet::model {

struct MAConvConfig {
  int in_channels = 0;
  int out_channels = 0;
  int splits = 2;

  /// Throws ArgumentError unless S >= 2 divides both channel counts and the
  /// hidden width C_in (S - 1) / (2 S) is a positive integer.
  void validate() const;
  int split_in() const { return in_channels / splits; }
  int split_out() const { return out_channels / splits; }
  int complement() const { return in_channels - split_in(); }
  int hidden() const { return in_channels * (splits - 1) / (2 * splits); }
};

/// (9 / S) C_in C_out + ((S^2 - 1) / (2 S)) C_in^2 as an exact integer, or -1
/// when the configuration has no integral layer.
std::int64_t maconv_param_formula(int in_channels, int out_channels, int splits);

template <typename T>
class MAConvLayer {
 public:
  struct Split {
    nn::Parameter<T> fc1_weight, fc1_bias;  // complement -> hidden, 1x1
    nn::Parameter<T> fc2_weight, fc2_bias;  // hidden -> 2 C_in / S, 1x1
    nn::Parameter<T> conv_weight, conv_bias;  // C_in / S -> C_out / S, 3x3
  };

  MAConvLayer() = default;
  MAConvLayer(const MAConvConfig& config, const std::string& name);

  const MAConvConfig& config() const { return config_; }
  const std::string& name() const { return name_; }
  std::vector<Split>& splits() { return splits_; }
  const std::vector<Split>& splits() const { return splits_; }

  /// Fan-in uniform U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and
  /// biases, except the beta half of fc2_bias which starts at 1.
  void init(std::mt19937_64& rng);

  nn::Var<T> forward(const nn::Var<T>& x, nn::Tape<T>* tape);

  std::vector<nn::Parameter<T>*> params();
  std::vector<const nn::Parameter<T>*> params() const;

  std::int64_t param_count(bool include_bias) const;
  /// Multiply-accumulates of the convolutions at an H_f x W_f feature map.
  std::int64_t mac_count(std::int64_t hf, std::int64_t wf) const;

 private:
  MAConvConfig config_;
  std::string name_;
  std::vector<Split> splits_;
};

}  // namespace manet::model
