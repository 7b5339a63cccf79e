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

#include "hetcond/noise.h"

#include <algorithm>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "hetcond/rng.h"

namespace hetcond {

double NoiseProfile::snr(NoiseCategory c) const {
  auto it = snrByCategory.find(c);
  if (it == snrByCategory.end()) {
    throw std::invalid_argument("profile " + name + " has no SNR for " +
                                categoryName(c));
  }
  return it->second;
}

NoiseProfile NoiseProfile::h1() {
  return {"h1",
          {{NoiseCategory::kNatural, -5.0},
           {NoiseCategory::kInterior, -20.0},
           {NoiseCategory::kHuman, -20.0}}};
}

NoiseProfile NoiseProfile::h2() {
  return {"h2",
          {{NoiseCategory::kNatural, -20.0},
           {NoiseCategory::kInterior, -1.0},
           {NoiseCategory::kHuman, -5.0}}};
}

NoiseProfile NoiseProfile::h3() {
  return {"h3",
          {{NoiseCategory::kNatural, -5.0},
           {NoiseCategory::kInterior, -30.0},
           {NoiseCategory::kHuman, -10.0}}};
}

NoiseProfile NoiseProfile::byName(const std::string& name) {
  if (name == "h1") return h1();
  if (name == "h2") return h2();
  if (name == "h3") return h3();
  throw std::invalid_argument("unknown noise profile '" + name +
                              "' (expected h1, h2 or h3)");
}

NoiseBank loadNoiseBank(const std::string& root) {
  namespace fs = std::filesystem;
  NoiseBank bank;
  for (auto c : kAllNoiseCategories) {
    const fs::path dir = fs::path(root) / categoryName(c);
    if (!fs::is_directory(dir)) {
      throw std::runtime_error("noise bank is missing directory " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".wav") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    auto& clips = bank[c];
    for (const auto& f : files) {
      clips.push_back(readWav(f.string()));
    }
  }
  return bank;
}

ApplyProfileStats applyProfile(std::vector<Utterance>& corpus,
                               const NoiseProfile& profile,
                               const NoiseBank& bank, std::uint64_t seed) {
  for (auto c : kAllNoiseCategories) {
    auto it = bank.find(c);
    if (it == bank.end() || it->second.empty()) {
      throw std::invalid_argument("noise bank category " + categoryName(c) +
                                  " is empty");
    }
    profile.snr(c);
  }
  ApplyProfileStats stats;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& u = corpus[i];
    std::mt19937_64 rng(deriveSeed(seed, "apply_profile", i));
    std::uniform_int_distribution<int> catDist(0, kNumNoiseCategories - 1);
    const NoiseCategory cat = categoryFromIndex(catDist(rng));
    const auto& clips = bank.at(cat);
    std::uniform_int_distribution<std::size_t> clipDist(0, clips.size() - 1);
    const auto& clip = clips[clipDist(rng)];
    const double snr = profile.snr(cat);
    auto mixed = mixAtSnr(u.cleanAudio, clip, snr, rng());
    stats.clippedSamples += mixed.noisy.clippedSamples;
    u.audio = std::move(mixed.noisy);
    u.condition = NoiseCondition{cat, snr};
    ++stats.categoryCounts[categoryIndex(cat)];
  }
  return stats;
}

} // namespace hetcond
