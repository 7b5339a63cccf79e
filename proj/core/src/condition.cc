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

#include "hetcond/condition.h"

#include <stdexcept>

namespace hetcond {

std::string categoryName(NoiseCategory c) {
  switch (c) {
    case NoiseCategory::kNatural:
      return "natural";
    case NoiseCategory::kHuman:
      return "human";
    case NoiseCategory::kInterior:
      return "interior";
  }
  throw std::invalid_argument("unknown noise category");
}

NoiseCategory parseCategory(const std::string& name) {
  for (auto c : kAllNoiseCategories) {
    if (categoryName(c) == name) {
      return c;
    }
  }
  throw std::invalid_argument("unknown noise category '" + name +
                              "' (expected natural, human or interior)");
}

NoiseCategory categoryFromIndex(int index) {
  if (index < 0 || index >= kNumNoiseCategories) {
    throw std::invalid_argument("noise category index out of range: " +
                                std::to_string(index));
  }
  return static_cast<NoiseCategory>(index);
}

} // namespace hetcond
