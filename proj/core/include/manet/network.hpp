// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Kernel estimation network.
//
//   head    3x3 conv, in -> c1
//   block1  residual MAConv block at c1
//   down    2x2 conv stride 2, c1 -> c2
//   block2  residual MAConv block at c2
//   up      2x2 transposed conv stride 2, c2 -> c1, then + block1 output
//   block3  residual MAConv block at c1, then + head output
//   tail    3x3 conv, c1 -> h*w, channel softmax, nearest upsample by s
//
// Odd LR extents are replicate-padded on the bottom/right before the head and
// the logits are cropped back, so the map always covers s*H x s*W.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "manet/maconv.hpp"
#include "manet/serialize.hpp"

namespace manet::model {

struct MANetConfig {
  int in_channels = 1;
  std::array<int, 3> channels{128, 256, 128};
  int splits = 2;
  int kernel_size = 21;
  int scale = 4;
  int maconv_per_block = 2;

  void validate() const;
  int taps() const { return kernel_size * kernel_size; }
  /// "in=1 channels=128,256,128 S=2 kernel=21 s=4 depth=2"
  std::string signature() const;
  bool operator==(const MANetConfig&) const = default;
};

/// Residual block: x + L_n(ReLU(... ReLU(L_1(x)))).
template <typename T>
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(int channels, int splits, int depth, const std::string& name);

  nn::Var<T> forward(const nn::Var<T>& x, nn::Tape<T>* tape);
  std::vector<MAConvLayer<T>>& layers() { return layers_; }
  const std::vector<MAConvLayer<T>>& layers() const { return layers_; }

 private:
  std::vector<MAConvLayer<T>> layers_;
};

template <typename T>
class MANet {
 public:
  struct Conv {
    nn::Parameter<T> weight;
    nn::Parameter<T> bias;
  };

  MANet() = default;
  explicit MANet(const MANetConfig& config, std::uint64_t seed = 0);

  const MANetConfig& config() const { return config_; }

  /// Pre-softmax logits at LR resolution: N x (h*w) x H x W.
  nn::Var<T> forward_logits(const nn::Var<T>& lr, nn::Tape<T>* tape = nullptr);
  /// Kernel map at HR resolution: N x (h*w) x sH x sW, softmax over channels.
  nn::Var<T> forward(const nn::Var<T>& lr, nn::Tape<T>* tape = nullptr);
  /// Inference convenience.
  nn::Tensor<T> estimate(const nn::Tensor<T>& lr);

  std::vector<nn::Parameter<T>*> params();
  std::vector<const nn::Parameter<T>*> params() const;
  std::int64_t param_count(bool include_bias) const;

  Conv& head() { return head_; }
  Conv& down() { return down_; }
  Conv& up() { return up_; }
  Conv& tail() { return tail_; }
  std::array<ResBlock<T>, 3>& blocks() { return blocks_; }
  const std::array<ResBlock<T>, 3>& blocks() const { return blocks_; }

  /// Optimizer steps this network has been trained for (persisted).
  std::int64_t trained_steps = 0;

  /// Parameters plus "meta.config" and "meta.steps" records.
  nn::TensorList<T> state() const;
  /// Throws StateError naming both configurations if they differ.
  void load_state(const nn::TensorList<T>& records);
  void save(const std::filesystem::path& path) const;
  static MANet load(const std::filesystem::path& path);

  /// Element-wise copy with another precision.
  template <typename U>
  MANet<U> cast() const;

 private:
  MANetConfig config_;
  Conv head_, down_, up_, tail_;
  std::array<ResBlock<T>, 3> blocks_;
};

/// Config stored in a state record list.
template <typename T>
MANetConfig config_from_state(const nn::TensorList<T>& records);

/// Config stored in a checkpoint file, read without loading the weights into a network.
MANetConfig read_checkpoint_config(const std::filesystem::path& path);

}  // namespace manet::model

namespace manet::model {

template <typename T>
template <typename U>
MANet<U> MANet<T>::cast() const {
  MANet<U> out(config_, 0);
  auto dst = out.params();
  const auto src = params();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->value = src[i]->value.template cast<U>();
    dst[i]->zero_grad();
  }
  out.trained_steps = trained_steps;
  return out;
}

}  // namespace manet::model
