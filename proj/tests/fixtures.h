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

// Small in-memory datasets for network tests.

#include <deque>
#include <random>
#include <vector>

#include "hetcond/models.h"
#include "test_util.h"

namespace hetcond::testing {

struct ExampleSet {
  std::deque<Tensor> storage;  // stable addresses
  std::vector<Example> examples;

  std::vector<const Example*> batch() const {
    std::vector<const Example*> out;
    for (const auto& e : examples) out.push_back(&e);
    return out;
  }
};

// Random T x 40 features (T in [minLen, maxLen]), random clean targets, random
// soft labels and conditions cycling through `conditions`.
inline ExampleSet randomExamples(std::size_t n, std::uint64_t seed,
                                 std::vector<int> conditions = {0, 1, 2},
                                 std::size_t minLen = 5, std::size_t maxLen = 11) {
  ExampleSet s;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(minLen, maxLen);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t T = len(rng);
    const Tensor* f = &s.storage.emplace_back(randomTensor({T, 40}, rng));
    const Tensor* c = &s.storage.emplace_back(randomTensor({T, 40}, rng));
    Example e;
    e.features = f;
    e.clean = c;
    const double a = u(rng), b = u(rng), d = u(rng);
    e.target = {a / (a + b + d), b / (a + b + d), d / (a + b + d)};
    e.label = static_cast<int>(std::max_element(e.target.begin(), e.target.end()) -
                               e.target.begin());
    e.condition = conditions[i % conditions.size()];
    s.examples.push_back(e);
  }
  return s;
}

inline BaselineConfig tinyBaseline() {
  BaselineConfig c;
  c.encoder.channels = 4;
  c.encoder.kernel = 3;
  c.head.hidden = {6, 6};
  return c;
}

} // namespace hetcond::testing
