// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "vcd/autodiff.hpp"

#include <stdexcept>
#include <unordered_set>

namespace vcd {

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

Var Var::make(Tensor v, std::vector<Var> parents, std::function<void(Node&)> bwd) {
  bool need = false;
  if (GradMode::enabled()) {
    for (const auto& p : parents) {
      if (p.defined() && p.requires_grad()) {
        need = true;
        break;
      }
    }
  }
  if (!need) return Var::constant(std::move(v));

  Var out;
  out.node_ = std::make_shared<Node>();
  out.node_->value = std::move(v);
  out.node_->requires_grad = true;
  out.node_->parents.reserve(parents.size());
  for (auto& p : parents) out.node_->parents.push_back(p.node());
  out.node_->backward = std::move(bwd);
  return out;
}

void backward(const Var& root) {
  if (!root.defined()) throw std::invalid_argument("backward: undefined root");
  if (root.value().size() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS for a topological ordering.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({root.node().get(), 0});
  visited.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.n->parents.size()) {
      Node* child = f.n->parents[f.next_child++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.defined()) n->backward(*n);
  }
}

Var detach(const Var& x) { return Var::constant(x.value()); }

}  // namespace vcd
