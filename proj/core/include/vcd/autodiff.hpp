// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vcd/tensor.hpp"

namespace vcd {

/// Reverse-mode autodiff over Tensors. Graphs are built define-by-run and
/// discarded after backward(); parameters are leaf nodes whose value tensors
/// are updated in place between steps.
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  Tensor& ensure_grad() {
    if (!grad.defined()) grad = Tensor(value.shape());
    return grad;
  }
};

/// Thread-local switch: when disabled, ops produce constant nodes with no
/// parents, so teacher/eval passes carry no gradient structure at all.
class GradMode {
 public:
  static bool enabled();
  static void set(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Var {
 public:
  Var() = default;

  static Var constant(Tensor v) {
    Var out;
    out.node_ = std::make_shared<Node>();
    out.node_->value = std::move(v);
    return out;
  }

  static Var parameter(Tensor v) {
    Var out;
    out.node_ = std::make_shared<Node>();
    out.node_->value = std::move(v);
    out.node_->requires_grad = true;
    return out;
  }

  /// Op constructor: wires parents and the backward closure; collapses to a
  /// constant when grad mode is off or no parent needs gradients.
  static Var make(Tensor v, std::vector<Var> parents, std::function<void(Node&)> bwd);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value_mut() { return node_->value; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& grad() { return node_->ensure_grad(); }
  const Tensor& grad_view() const { return node_->grad; }
  bool has_grad() const { return node_ && node_->grad.defined(); }
  void zero_grad() {
    if (node_ && node_->grad.defined()) node_->grad.fill(0.0);
  }
  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Runs reverse accumulation from a scalar root (size()==1).
void backward(const Var& root);

/// Value copy with no gradient history.
Var detach(const Var& x);

}  // namespace vcd
