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

#include <span>
#include <vector>

#include "hetcond/autodiff.h"

namespace hetcond {

// Layer and loss primitives. Sequences are (T x C) time-major matrices.
// Shape violations throw std::invalid_argument.

// Dilated "same" convolution. kernel is (K x C_in x C_out), bias (C_out).
// Pads floor((K-1)d/2) zeros on the left and the remainder on the right, so
// output length equals input length for every K and dilation.
Var conv1dSame(const Var& input, const Var& kernel, const Var& bias, int dilation);

// Transposed (fractionally strided) convolution producing stride*L frames.
// Input frame i contributes to output frames i*stride + k - (K-1)/2.
Var convTranspose1d(const Var& input, const Var& kernel, const Var& bias, int stride);

// Max over windows of `pool` frames every `stride` frames, per channel; the
// trailing partial window is pooled over the frames it has. Output length is
// ceil(T / stride). Gradient goes to the first maximal element.
Var maxPool1d(const Var& input, int pool, int stride);

// (N x D) * (D x U) + bias(U).
Var dense(const Var& input, const Var& weights, const Var& bias);

Var relu(const Var& x);

// Identity forward; backward multiplies the upstream gradient by -lambda.
// lambda == 0 contributes nothing upstream.
Var gradReverse(const Var& x, double lambda);

// Mean over rows: (T x C) -> (1 x C).
Var meanPoolTime(const Var& x);

// Stacks (1 x C) rows into (N x C).
Var stackRows(std::span<const Var> rows);
// [a | b] along columns; row counts must match.
Var concatCols(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
// Sum of scalars weighted by coefficients.
Var weightedSum(std::span<const Var> scalars, std::span<const double> weights);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var sumSquares(const Var& x);
// Sum of elementwise products with a constant coefficient tensor.
Var dotConstant(const Var& x, const Tensor& coeffs);

// Divides each row by its L2 norm (rows with norm below eps pass through
// scaled by 1/eps).
Var rowNormalize(const Var& x, double eps = 1e-12);

// Crops or zero-pads the row dimension to exactly `rows` rows.
Var fitRows(const Var& x, std::size_t rows);

// Mean over rows of -sum_b target[b] * log softmax(logits)[b]. Each target
// row must be a distribution (nonnegative, sums to 1 within 1e-6).
Var softmaxCrossEntropy(const Var& logits, const Tensor& target);

// Mean of squared differences.
Var mse(const Var& prediction, const Tensor& target);

// Row-wise softmax, value only.
Tensor softmaxRows(const Tensor& logits);

} // namespace hetcond
