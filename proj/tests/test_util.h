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

// Test-only oracles: central finite differences and random tensors. Nothing
// here calls into the gradient code it checks except to read the analytic
// gradients being compared.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hetcond/autodiff.h"
#include "hetcond/optim.h"

namespace hetcond::testing {

inline Tensor randomTensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                           double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data) {
    v = u(rng);
  }
  return t;
}

struct GradCheckResult {
  double maxRelError = 0.0;
  std::size_t checked = 0;
  // Coordinates where a ReLU or max-pool switch lies inside [x - h, x + h]:
  // the forward and backward one-sided slopes disagree, so no derivative is
  // being measured there. Excluded from maxRelError and reported here.
  std::size_t kinks = 0;
};

inline double relError(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// Analytic gradients come from `analyticFn`, numeric ones from `numericFn`.
// The two differ only when a layer deliberately reports a gradient that is
// not the derivative of its forward value (gradient reversal); the caller then
// supplies the surrogate objective whose true derivative the analytic
// gradient should equal.
inline GradCheckResult finiteDifferenceCheck(
    const std::vector<Var>& leaves, const std::function<Var()>& analyticFn,
    const std::function<double()>& numericFn, double h = 1e-5,
    std::size_t maxPerLeaf = 0, unsigned seed = 0);

// Compares analytic gradients of `lossFn` (rebuilt from scratch on each call)
// with central differences of step `h` for every entry of every leaf in
// `leaves`, or for at most `maxPerLeaf` randomly chosen entries per leaf.
inline GradCheckResult finiteDifferenceCheck(
    const std::vector<Var>& leaves, const std::function<Var()>& lossFn,
    double h = 1e-5, std::size_t maxPerLeaf = 0, unsigned seed = 0) {
  return finiteDifferenceCheck(
      leaves, lossFn, [&lossFn] { return lossFn().value().data[0]; }, h,
      maxPerLeaf, seed);
}

inline GradCheckResult finiteDifferenceCheck(
    const std::vector<Var>& leaves, const std::function<Var()>& analyticFn,
    const std::function<double()>& numericFn, double h, std::size_t maxPerLeaf,
    unsigned seed) {
  for (auto v : leaves) {
    v.zeroGrad();
  }
  Var loss = analyticFn();
  backward(loss);
  std::vector<Tensor> analytic;
  for (const auto& v : leaves) {
    analytic.push_back(v.grad());
  }

  GradCheckResult result;
  std::mt19937_64 rng(seed);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& data = leaves[li].node()->value.data;
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      idx[i] = i;
    }
    if (maxPerLeaf && idx.size() > maxPerLeaf) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(maxPerLeaf);
    }
    for (auto i : idx) {
      const double orig = data[i];
      data[i] = orig + h;
      const double up = numericFn();
      data[i] = orig - h;
      const double down = numericFn();
      data[i] = orig;
      const double center = numericFn();
      const double forward = (up - center) / h;
      const double backwardSlope = (center - down) / h;
      // A switch inside the interval biases the central difference by at most
      // half the slope mismatch, so anything below this bound cannot push the
      // reported error past 1e-4.
      if (std::abs(forward - backwardSlope) >
          2e-4 * std::max({std::abs(forward), std::abs(backwardSlope), 1e-6})) {
        ++result.kinks;
        continue;
      }
      const double numeric = (up - down) / (2.0 * h);
      result.maxRelError =
          std::max(result.maxRelError, relError(analytic[li].data[i], numeric));
      ++result.checked;
    }
  }
  return result;
}

// Zero-initialized biases put ReLUs fed by all-zero rows exactly on their
// kink, where central differences are meaningless. Moving every bias off zero
// keeps gradient checks on differentiable points.
inline void randomizeBiases(const ParamSet& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (const auto& p : params.items()) {
    if (p.var.value().shape.size() == 1) {
      for (auto& v : p.var.node()->value.data) {
        v = u(rng);
      }
    }
  }
}

inline std::vector<Var> leavesOf(const ParamSet& params) {
  std::vector<Var> out;
  for (const auto& p : params.items()) {
    out.push_back(p.var);
  }
  return out;
}

} // namespace hetcond::testing
