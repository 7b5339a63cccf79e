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

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetcond/condition.h"
#include "hetcond/utterance.h"

namespace hetcond {

// [count(r < mid), count(r == mid), count(r > mid)] / n, normalized so the
// entries sum to exactly 1. Throws std::invalid_argument on empty input.
LabelBins binRatings(const std::vector<double>& ratings, double midpoint);

// One utterance of a JSON-lines manifest.
struct ManifestRecord {
  std::string utteranceId;
  std::string dialogueId;
  int position = 0;
  std::string audioPath;
  std::string featurePath;
  std::string cleanFeaturePath;
  std::optional<std::vector<double>> ratings;
  std::optional<LabelBins> labelBins;
  std::optional<NoiseCondition> condition;
  std::string split = "train";  // train | val | test

  // Stored bins, or bins derived from ratings with `midpoint`.
  LabelBins bins(double midpoint = 3.0) const;
};

void to_json(nlohmann::json& j, const ManifestRecord& r);
void from_json(const nlohmann::json& j, ManifestRecord& r);

// Ids unique, positions 0..n-1 per dialogue, bins summing to 1 within 1e-6,
// split from the closed set, labels present. Throws std::invalid_argument.
void validateManifest(const std::vector<ManifestRecord>& records);

// One JSON object per line; validated on read and before writing. Errors
// name the offending line.
std::vector<ManifestRecord> readManifest(const std::string& path);
void writeManifest(const std::string& path,
                   const std::vector<ManifestRecord>& records);

} // namespace hetcond
