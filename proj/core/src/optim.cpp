// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/optim.hpp"

#include <cmath>

namespace manet::nn {

template <typename T>
void AdamState<T>::update(std::span<Parameter<T>* const> params) {
  if (first_.empty()) {
    for (auto* p : params) {
      first_.emplace_back(p->value.shape());
      second_.emplace_back(p->value.shape());
    }
  }
  if (first_.size() != params.size()) {
    throw DimensionError("adam: state tracks " + std::to_string(first_.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter<T>& p = *params[i];
    if (p.grad.shape() != p.value.shape() || first_[i].shape() != p.value.shape()) {
      throw DimensionError("adam: shape mismatch for parameter " + p.name);
    }
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const T lr = static_cast<T>(options_.learning_rate);
  const T eps = static_cast<T>(options_.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    T* m = first_[i].raw();
    T* v = second_[i].raw();
    T* w = p.value.raw();
    const T* g = p.grad.raw();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      m[k] = static_cast<T>(b1) * m[k] + static_cast<T>(1.0 - b1) * g[k];
      v[k] = static_cast<T>(b2) * v[k] + static_cast<T>(1.0 - b2) * g[k] * g[k];
      const T mhat = m[k] / static_cast<T>(c1);
      const T vhat = v[k] / static_cast<T>(c2);
      w[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <typename T>
void AdamState<T>::save(TensorList<T>& out, std::span<Parameter<T>* const> params) const {
  out.emplace_back("adam.step", Tensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(step_)));
  if (first_.empty()) return;
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.emplace_back("adam.m." + params[i]->name, first_[i]);
    out.emplace_back("adam.v." + params[i]->name, second_[i]);
  }
}

template <typename T>
void AdamState<T>::load(const TensorList<T>& records, std::span<Parameter<T>* const> params) {
  const Tensor<T>* step = nullptr;
  for (const auto& [name, t] : records) {
    if (name == "adam.step") step = &t;
  }
  if (step == nullptr) throw StateError("checkpoint has no optimizer state");
  step_ = static_cast<std::int64_t>((*step)[0]);
  first_.clear();
  second_.clear();
  if (step_ == 0) return;
  auto find = [&](const std::string& key) -> const Tensor<T>& {
    for (const auto& [name, t] : records) {
      if (name == key) return t;
    }
    throw StateError("checkpoint missing record " + key);
  };
  for (auto* p : params) {
    const Tensor<T>& m = find("adam.m." + p->name);
    const Tensor<T>& v = find("adam.v." + p->name);
    if (m.shape() != p->value.shape() || v.shape() != p->value.shape()) {
      throw StateError("optimizer moment shape " + m.shape().str() + " does not match parameter " + p->name +
                       " " + p->value.shape().str());
    }
    first_.push_back(m);
    second_.push_back(v);
  }
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace manet::nn
