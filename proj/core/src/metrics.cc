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

#include "hetcond/metrics.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hetcond {

Tensor confusionMatrix(std::span<const int> truth, std::span<const int> predicted,
                       int classes) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("confusionMatrix: length mismatch");
  }
  if (classes < 1) {
    throw std::invalid_argument("confusionMatrix: classes must be positive");
  }
  const auto k = static_cast<std::size_t>(classes);
  Tensor m({k, k});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 ||
        predicted[i] >= classes) {
      throw std::invalid_argument("confusionMatrix: class index out of range");
    }
    m.at(truth[i], predicted[i]) += 1.0;
  }
  return m;
}

double uar(const Tensor& confusion) {
  if (confusion.shape.size() != 2 || confusion.shape[0] != confusion.shape[1]) {
    throw std::invalid_argument("uar: expected a square matrix, got " +
                                shapeString(confusion.shape));
  }
  const std::size_t k = confusion.rows();
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t r = 0; r < k; ++r) {
    double rowSum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      rowSum += confusion.at(r, c);
    }
    if (rowSum > 0.0) {
      total += confusion.at(r, r) / rowSum;
      ++used;
    }
  }
  if (used == 0) {
    throw std::invalid_argument("uar: confusion matrix is all zero");
  }
  return total / static_cast<double>(used);
}

double uar(std::span<const int> truth, std::span<const int> predicted,
           int classes) {
  return uar(confusionMatrix(truth, predicted, classes));
}

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw std::invalid_argument("accuracy: need equal, non-empty inputs");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += truth[i] == predicted[i];
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double mean(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("mean of an empty list");
  }
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) {
    return 0.0;
  }
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) {
    ss += (v - m) * (v - m);
  }
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

} // namespace hetcond
