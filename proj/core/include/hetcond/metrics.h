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

#include "hetcond/tensor.h"

namespace hetcond {

// B x B counts with true classes on rows.
Tensor confusionMatrix(std::span<const int> truth, std::span<const int> predicted,
                       int classes);

// Unweighted average recall: mean over classes with nonzero support of
// diag / rowsum. Throws std::invalid_argument on an all-zero matrix.
double uar(const Tensor& confusion);
double uar(std::span<const int> truth, std::span<const int> predicted, int classes);

double accuracy(std::span<const int> truth, std::span<const int> predicted);

double mean(std::span<const double> values);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> values);

} // namespace hetcond
