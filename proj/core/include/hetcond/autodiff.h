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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hetcond/tensor.h"

namespace hetcond {

// A node of the reverse-mode tape. Each operation creates one node holding
// its forward value and a closure that pushes the node's gradient into its
// parents. Gradients are allocated lazily on first accumulation.
struct Node {
  Tensor value;
  Tensor grad;
  bool hasGrad = false;
  bool requiresGrad = false;
  std::uint64_t tapeId = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backwardFn;

  // grad += g (allocating grad on first use).
  void accumulate(const Tensor& g);
  // Returns the gradient buffer, zero-allocated if absent.
  Tensor& gradBuffer();
};

// Handle to a tape node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  // Leaf constructors.
  static Var constant(Tensor value);
  static Var parameter(Tensor value);

  const Tensor& value() const { return node_->value; }
  Tensor& mutableValue() { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  bool hasGrad() const { return node_ && node_->hasGrad; }
  // Gradient, or a zero tensor of the value's shape if nothing accumulated.
  Tensor grad() const;
  void zeroGrad();
  bool requiresGrad() const { return node_ && node_->requiresGrad; }
  std::uint64_t tapeId() const { return node_->tapeId; }

  bool defined() const { return static_cast<bool>(node_); }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Builds an interior node; the closure receives the finished node.
Var makeNode(
    Tensor value,
    std::vector<Var> parents,
    std::function<void(Node&)> backwardFn);

// Populates gradients on every node reachable from `loss` (which must hold a
// single element). Nodes are visited once each, in reverse topological order.
// Returns the number of nodes visited.
std::size_t backward(const Var& loss);

} // namespace hetcond
