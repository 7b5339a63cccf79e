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
#include <optional>
#include <string>

#include "hetcond/audio.h"
#include "hetcond/condition.h"
#include "hetcond/tensor.h"

namespace hetcond {

inline constexpr int kNumEmotionBins = 3;
using LabelBins = std::array<double, kNumEmotionBins>;

// One sample as it moves through the pipeline: clean audio, noisy audio after
// a profile is applied, and the matching feature matrices (T x 40).
struct Utterance {
  std::string id;
  std::string dialogueId;
  int position = 0;

  Waveform cleanAudio;
  Waveform audio;  // noisy once a profile is applied, else a copy of clean
  Tensor features;
  Tensor cleanFeatures;

  std::optional<NoiseCondition> condition;
  LabelBins labelBins{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::string split = "train";

  // Majority bin (lowest index on ties); the class used for recall.
  int emotionClass() const;
};

} // namespace hetcond
