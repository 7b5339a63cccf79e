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
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetcond/audio.h"
#include "hetcond/condition.h"
#include "hetcond/utterance.h"

namespace hetcond {

struct NoiseProfile {
  std::string name;
  std::map<NoiseCategory, double> snrByCategory;

  double snr(NoiseCategory c) const;

  // Grocery store (h1), sidewalk (h2), interior (h3).
  static NoiseProfile h1();
  static NoiseProfile h2();
  static NoiseProfile h3();
  // "h1" | "h2" | "h3"; throws otherwise.
  static NoiseProfile byName(const std::string& name);
};

using NoiseBank = std::map<NoiseCategory, std::vector<Waveform>>;

// Loads natural/, human/, interior/ subdirectories of PCM16 mono WAV files.
NoiseBank loadNoiseBank(const std::string& root);

struct ApplyProfileStats {
  std::array<std::size_t, 3> categoryCounts{};
  std::size_t clippedSamples = 0;
};

// For each utterance: draws a category uniformly, a clip uniformly within the
// category, overlays it at the profile's SNR for that category and records
// the condition. Utterance `i` uses an RNG stream derived from (seed, i), so
// results do not depend on processing order. Clean audio and clean features
// are left untouched.
ApplyProfileStats applyProfile(std::vector<Utterance>& corpus,
                               const NoiseProfile& profile,
                               const NoiseBank& bank, std::uint64_t seed);

} // namespace hetcond
