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

#include "hetcond/optim.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace hetcond {

void ParamSet::add(std::string name, Var v) {
  if (!v.defined()) {
    throw std::invalid_argument("ParamSet::add: undefined parameter " + name);
  }
  items_.push_back({std::move(name), std::move(v)});
}

void ParamSet::append(const ParamSet& other, const std::string& prefix) {
  for (const auto& p : other.items_) {
    items_.push_back({prefix + p.name, p.var});
  }
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& p : items_) {
    n += p.var.value().numel();
  }
  return n;
}

void ParamSet::zeroGrad() const {
  for (const auto& p : items_) {
    Var v = p.var;
    v.zeroGrad();
  }
}

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : items_) {
    const auto& data = p.var.value().data;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

const Var* ParamSet::find(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) {
      return &p.var;
    }
  }
  return nullptr;
}

void adadeltaStep(const ParamSet& params, AdadeltaState& state) {
  for (const auto& p : params.items()) {
    Node* node = p.var.node();
    auto& value = node->value.data;
    auto& eg = state.accGradSq[node];
    auto& eu = state.accUpdateSq[node];
    if (eg.empty()) {
      eg.assign(value.size(), 0.0);
      eu.assign(value.size(), 0.0);
    }
    const bool hasGrad = node->hasGrad;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = hasGrad ? node->grad.data[i] : 0.0;
      eg[i] = state.rho * eg[i] + (1.0 - state.rho) * g * g;
      const double native =
          -(std::sqrt(eu[i] + state.epsilon) / std::sqrt(eg[i] + state.epsilon)) * g;
      eu[i] = state.rho * eu[i] + (1.0 - state.rho) * native * native;
      value[i] += state.lr * native;
    }
  }
}

void clipWeights(const ParamSet& params, double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("clipWeights: bound must be positive");
  }
  for (const auto& p : params.items()) {
    for (auto& v : p.var.node()->value.data) {
      v = std::clamp(v, -c, c);
    }
  }
}

} // namespace hetcond
