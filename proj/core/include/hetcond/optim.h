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
#include <string>
#include <unordered_map>
#include <vector>

#include "hetcond/autodiff.h"

namespace hetcond {

struct NamedParam {
  std::string name;
  Var var;
};

// Ordered collection of named trainable leaves.
class ParamSet {
 public:
  void add(std::string name, Var v);
  void append(const ParamSet& other, const std::string& prefix = "");

  const std::vector<NamedParam>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t count() const;  // total scalar parameters

  void zeroGrad() const;
  // FNV-1a over the raw bytes of every value, in order.
  std::uint64_t checksum() const;
  const Var* find(const std::string& name) const;

 private:
  std::vector<NamedParam> items_;
};

// Adadelta with an outer learning-rate multiplier. The accumulated update
// statistic tracks the unscaled Adadelta step, so lr only rescales what is
// applied to the parameters.
struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  double lr = 1e-3;
  std::unordered_map<const Node*, std::vector<double>> accGradSq;
  std::unordered_map<const Node*, std::vector<double>> accUpdateSq;
};

// One update of every parameter in `params` using its accumulated gradient
// (absent gradients count as zero).
void adadeltaStep(const ParamSet& params, AdadeltaState& state);

// Clamps every parameter entry to [-c, c].
void clipWeights(const ParamSet& params, double c);

} // namespace hetcond
