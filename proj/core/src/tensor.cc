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

#include "hetcond/tensor.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hetcond {

std::size_t shapeNumel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    n *= d;
  }
  return n;
}

std::string shapeString(const Shape& shape) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    ss << (i ? "," : "") << shape[i];
  }
  ss << ']';
  return ss.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  for (auto d : shape) {
    if (d == 0) {
      throw std::invalid_argument("Tensor: zero-sized dimension in shape " +
                                  shapeString(shape));
    }
  }
  data.assign(shapeNumel(shape), fill);
}

Tensor::Tensor(Shape s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (shapeNumel(shape) != data.size()) {
    throw std::invalid_argument(
        "Tensor: shape " + shapeString(shape) + " does not match " +
        std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::scalar(double v) {
  return Tensor({1}, std::vector<double>{v});
}

Tensor Tensor::matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw std::invalid_argument("Tensor::matrix: ragged rows");
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape.size() != 2) {
    throw std::invalid_argument("Tensor::rows: rank-2 tensor expected, got " +
                                shapeString(shape));
  }
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() != 2) {
    throw std::invalid_argument("Tensor::cols: rank-2 tensor expected, got " +
                                shapeString(shape));
  }
  return shape[1];
}

std::span<double> Tensor::row(std::size_t r) {
  const auto c = cols();
  return {data.data() + r * c, c};
}

std::span<const double> Tensor::row(std::size_t r) const {
  const auto c = cols();
  return {data.data() + r * c, c};
}

void Tensor::fill(double v) {
  std::fill(data.begin(), data.end(), v);
}

double Tensor::sum() const {
  return std::accumulate(data.begin(), data.end(), 0.0);
}

} // namespace hetcond
