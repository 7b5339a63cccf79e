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

#include <array>
#include <string>

namespace hetcond {

// Closed set of noise categories. The numeric value doubles as the noise
// condition (domain) index, since a profile fixes one SNR per category.
enum class NoiseCategory : int { kNatural = 0, kHuman = 1, kInterior = 2 };

inline constexpr int kNumNoiseCategories = 3;
inline constexpr std::array<NoiseCategory, 3> kAllNoiseCategories = {
    NoiseCategory::kNatural, NoiseCategory::kHuman, NoiseCategory::kInterior};

std::string categoryName(NoiseCategory c);
// Throws std::invalid_argument for names outside {natural, human, interior}.
NoiseCategory parseCategory(const std::string& name);
NoiseCategory categoryFromIndex(int index);
inline int categoryIndex(NoiseCategory c) { return static_cast<int>(c); }

struct NoiseCondition {
  NoiseCategory category = NoiseCategory::kNatural;
  double snrDb = 0.0;

  int index() const { return categoryIndex(category); }
  bool operator==(const NoiseCondition&) const = default;
};

} // namespace hetcond
