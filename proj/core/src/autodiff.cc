/* Copyright 2026 The hetcond Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hetcond/autodiff.h"

#include <atomic>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace hetcond {

namespace {

std::uint64_t nextTapeId() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

} // namespace

void Node::accumulate(const Tensor& g) {
  if (g.shape != value.shape) {
    throw std::logic_error("gradient shape " + shapeString(g.shape) +
                           " does not match value shape " +
                           shapeString(value.shape));
  }
  if (!hasGrad) {
    grad = g;
    hasGrad = true;
    return;
  }
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    grad.data[i] += g.data[i];
  }
}

Tensor& Node::gradBuffer() {
  if (!hasGrad) {
    grad = Tensor(value.shape, 0.0);
    hasGrad = true;
  }
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->tapeId = nextTapeId();
  return Var(std::move(node));
}

Var Var::parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requiresGrad = true;
  node->tapeId = nextTapeId();
  return Var(std::move(node));
}

Tensor Var::grad() const {
  if (node_->hasGrad) {
    return node_->grad;
  }
  return Tensor(node_->value.shape, 0.0);
}

void Var::zeroGrad() {
  node_->hasGrad = false;
  node_->grad = Tensor();
}

Var makeNode(
    Tensor value,
    std::vector<Var> parents,
    std::function<void(Node&)> backwardFn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->tapeId = nextTapeId();
  for (auto& p : parents) {
    if (p.requiresGrad()) {
      node->requiresGrad = true;
    }
    node->parents.push_back(p.shared());
  }
  if (node->requiresGrad) {
    node->backwardFn = std::move(backwardFn);
  }
  return Var(std::move(node));
}

std::size_t backward(const Var& loss) {
  if (!loss.defined()) {
    throw std::invalid_argument("backward: undefined loss");
  }
  if (loss.value().numel() != 1) {
    throw std::invalid_argument(
        "backward: loss must hold a single element, got shape " +
        shapeString(loss.shape()));
  }
  if (!loss.requiresGrad()) {
    return 0;
  }

  // Iterative post-order DFS gives a topological order; walk it backwards.
  std::vector<Node*> order;
  std::unordered_set<const Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requiresGrad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  loss.node()->accumulate(Tensor(loss.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backwardFn && node->hasGrad) {
      node->backwardFn(*node);
    }
  }
  return order.size();
}

} // namespace hetcond
