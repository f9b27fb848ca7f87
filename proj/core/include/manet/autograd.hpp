// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over Tensor values.
//
// Values flow through `Var` handles. When a Var is bound to a Tape and some
// input requires a gradient, the producing op records a node holding its
// backward closure. `Tape::backward` replays those closures in reverse record
// order. Without a tape no closures are kept and intermediates are released as
// soon as their handles go out of scope, which is the inference path.

#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "manet/tensor.hpp"

namespace manet::nn {

/// A learnable tensor and its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool grad_ready = false;
  bool requires_grad = false;
  std::function<void(Node&)> backward;

  Tensor<T>& grad_buffer() {
    if (!grad_ready) {
      grad = Tensor<T>(value.shape());
      grad_ready = true;
    }
    return grad;
  }
};

template <typename T>
class Tape;

template <typename T>
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node<T>> node, Tape<T>* tape) : node_(std::move(node)), tape_(tape) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  Tape<T>* tape() const { return tape_; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

  /// Gradient accumulated by the last backward pass; zeros if unreached.
  Tensor<T> grad() const {
    if (node_->grad_ready) return node_->grad;
    return Tensor<T>(node_->value.shape());
  }

 private:
  std::shared_ptr<Node<T>> node_;
  Tape<T>* tape_ = nullptr;
};

/// Ordered record of executed differentiable operations.
template <typename T>
class Tape {
 public:
  void record(std::shared_ptr<Node<T>> node) { nodes_.push_back(std::move(node)); }

  std::size_t size() const { return nodes_.size(); }

  /// Number of recorded nodes whose adjoint ran during the last backward pass.
  std::size_t last_visits() const { return last_visits_; }

  void clear() {
    nodes_.clear();
    last_visits_ = 0;
  }

  void backward(const Var<T>& loss) {
    if (!loss.defined() || loss.value().size() != 1) {
      throw ArgumentError("backward requires a scalar loss, got shape " +
                          (loss.defined() ? loss.shape().str() : std::string("<undefined>")));
    }
    if (loss.tape() != this) throw ArgumentError("backward: loss was not produced on this tape");
    last_visits_ = 0;
    if (!loss.requires_grad()) return;
    loss.node()->grad_buffer()[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<T>& node = **it;
      if (!node.grad_ready || !node.backward) continue;
      node.backward(node);
      ++last_visits_;
    }
  }

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
  std::size_t last_visits_ = 0;
};

/// Wraps a value that never receives a gradient.
template <typename T>
Var<T> constant(Tensor<T> value, Tape<T>* tape = nullptr) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return Var<T>(std::move(node), tape);
}

/// Leaf whose gradient is readable through `Var::grad` after backward.
template <typename T>
Var<T> leaf(Tensor<T> value, Tape<T>& tape) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var<T>(std::move(node), &tape);
}

/// Binds a Parameter. On backward its node gradient is added into `p.grad`.
/// With no tape the parameter acts as a constant.
template <typename T>
Var<T> parameter(Parameter<T>& p, Tape<T>* tape) {
  auto node = std::make_shared<Node<T>>();
  node->value = p.value;
  if (tape == nullptr) return Var<T>(std::move(node), nullptr);
  node->requires_grad = true;
  Parameter<T>* target = &p;
  node->backward = [target](Node<T>& self) {
    if (target->grad.shape() != target->value.shape()) target->grad = Tensor<T>(target->value.shape());
    T* g = target->grad.raw();
    const T* src = self.grad.raw();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += src[i];
  };
  tape->record(node);
  return Var<T>(std::move(node), tape);
}

namespace detail {

template <typename T>
Tape<T>* common_tape(std::initializer_list<const Var<T>*> inputs) {
  Tape<T>* tape = nullptr;
  for (const Var<T>* v : inputs) {
    if (v == nullptr || !v->defined() || v->tape() == nullptr) continue;
    if (tape != nullptr && tape != v->tape()) throw ArgumentError("inputs recorded on different tapes");
    tape = v->tape();
  }
  return tape;
}

/// Produces the output handle of an op, recording `backward` when needed.
template <typename T, typename Fn>
Var<T> make_result(const char* op, Tensor<T> value, std::initializer_list<const Var<T>*> inputs,
                   Fn&& backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite output");
  Tape<T>* tape = common_tape<T>(inputs);
  bool needs_grad = false;
  for (const Var<T>* v : inputs) {
    if (v != nullptr && v->requires_grad()) needs_grad = true;
  }
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  if (tape != nullptr && needs_grad) {
    node->requires_grad = true;
    node->backward = std::forward<Fn>(backward);
    tape->record(node);
  }
  return Var<T>(std::move(node), tape);
}

}  // namespace detail

}  // namespace manet::nn
