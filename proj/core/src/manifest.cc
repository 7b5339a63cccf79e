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

#include "hetcond/manifest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace hetcond {

LabelBins binRatings(const std::vector<double>& ratings, double midpoint) {
  if (ratings.empty()) {
    throw std::invalid_argument("binRatings: empty ratings");
  }
  std::array<std::size_t, kNumEmotionBins> counts{};
  for (double r : ratings) {
    ++counts[r < midpoint ? 0 : (r == midpoint ? 1 : 2)];
  }
  const double n = static_cast<double>(ratings.size());
  // The last non-empty bin takes the remainder, so bins summed in order give
  // exactly 1 and no entry can go negative through round-off.
  std::size_t last = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] > 0) last = b;
  }
  LabelBins bins{};
  double prefix = 0.0;
  for (std::size_t b = 0; b < last; ++b) {
    bins[b] = counts[b] / n;
    prefix += bins[b];
  }
  bins[last] = 1.0 - prefix;
  return bins;
}

LabelBins ManifestRecord::bins(double midpoint) const {
  if (labelBins) {
    return *labelBins;
  }
  if (ratings) {
    return binRatings(*ratings, midpoint);
  }
  throw std::invalid_argument("manifest record " + utteranceId +
                              " has neither ratings nor label_bins");
}

void to_json(nlohmann::json& j, const ManifestRecord& r) {
  j = nlohmann::json{{"utterance_id", r.utteranceId},
                     {"dialogue_id", r.dialogueId},
                     {"position", r.position},
                     {"split", r.split}};
  if (!r.audioPath.empty()) j["audio_path"] = r.audioPath;
  if (!r.featurePath.empty()) j["feature_path"] = r.featurePath;
  if (!r.cleanFeaturePath.empty()) j["clean_feature_path"] = r.cleanFeaturePath;
  if (r.ratings) j["ratings"] = *r.ratings;
  if (r.labelBins) j["label_bins"] = *r.labelBins;
  if (r.condition) {
    j["condition"] = {{"category", categoryName(r.condition->category)},
                      {"snr_db", r.condition->snrDb}};
  }
}

void from_json(const nlohmann::json& j, ManifestRecord& r) {
  r = ManifestRecord{};
  j.at("utterance_id").get_to(r.utteranceId);
  j.at("dialogue_id").get_to(r.dialogueId);
  j.at("position").get_to(r.position);
  r.split = j.value("split", std::string("train"));
  r.audioPath = j.value("audio_path", std::string());
  r.featurePath = j.value("feature_path", std::string());
  r.cleanFeaturePath = j.value("clean_feature_path", std::string());
  if (j.contains("ratings")) r.ratings = j.at("ratings").get<std::vector<double>>();
  if (j.contains("label_bins")) r.labelBins = j.at("label_bins").get<LabelBins>();
  if (j.contains("condition")) {
    const auto& c = j.at("condition");
    r.condition = NoiseCondition{parseCategory(c.at("category").get<std::string>()),
                                 c.at("snr_db").get<double>()};
  }
}

void validateManifest(const std::vector<ManifestRecord>& records) {
  std::set<std::string> ids;
  std::map<std::string, std::vector<int>> positions;
  for (const auto& r : records) {
    if (r.utteranceId.empty()) {
      throw std::invalid_argument("manifest: empty utterance_id");
    }
    if (!ids.insert(r.utteranceId).second) {
      throw std::invalid_argument("manifest: duplicate utterance_id " + r.utteranceId);
    }
    if (r.split != "train" && r.split != "val" && r.split != "test") {
      throw std::invalid_argument("manifest: " + r.utteranceId + " has split '" +
                                  r.split + "'");
    }
    const LabelBins b = r.bins();
    double sum = 0.0;
    for (double v : b) {
      if (v < 0.0) {
        throw std::invalid_argument("manifest: negative label bin for " +
                                    r.utteranceId);
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("manifest: label_bins of " + r.utteranceId +
                                  " sum to " + std::to_string(sum));
    }
    positions[r.dialogueId].push_back(r.position);
  }
  for (auto& [dialogue, pos] : positions) {
    std::sort(pos.begin(), pos.end());
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (pos[i] != static_cast<int>(i)) {
        throw std::invalid_argument("manifest: positions of dialogue " + dialogue +
                                    " are not contiguous from 0");
      }
    }
  }
}

std::vector<ManifestRecord> readManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open manifest " + path);
  }
  std::vector<ManifestRecord> records;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      records.push_back(nlohmann::json::parse(line).get<ManifestRecord>());
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineNo) + ": " +
                                  e.what());
    }
  }
  validateManifest(records);
  return records;
}

void writeManifest(const std::string& path,
                   const std::vector<ManifestRecord>& records) {
  validateManifest(records);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write manifest " + path);
  }
  for (const auto& r : records) {
    out << nlohmann::json(r).dump() << '\n';
  }
}

} // namespace hetcond
