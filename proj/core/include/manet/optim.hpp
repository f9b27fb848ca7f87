// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "manet/autograd.hpp"
#include "manet/serialize.hpp"

namespace manet::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moments are created on the first step and keyed by
/// parameter position, so the parameter list must keep its order.
template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamOptions options = {}) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  std::int64_t step() const { return step_; }

  void update(std::span<Parameter<T>* const> params);

  /// Moments and step counter as named records for a checkpoint.
  void save(TensorList<T>& out, std::span<Parameter<T>* const> params) const;
  /// Restores what `save` wrote; throws StateError on a shape mismatch.
  void load(const TensorList<T>& records, std::span<Parameter<T>* const> params);

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Tensor<T>> first_;
  std::vector<Tensor<T>> second_;
};

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
  state.update(params);
}

void zero_grads(auto& params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace manet::nn
