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
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetcond/manifest.h"
#include "hetcond/noise.h"
#include "hetcond/utterance.h"

namespace hetcond {

struct SynthConfig {
  int dialogues = 300;
  int utterancesPerDialogue = 10;
  std::uint64_t seed = 0;
  int sampleRate = 16000;
  double durationSec = 0.4;
  double repeatProbability = 0.6;  // next label copies the previous one

  // Fundamental frequency range (Hz) of each emotion class.
  std::array<std::pair<double, double>, kNumEmotionBins> f0Bands{
      {{100.0, 160.0}, {160.0, 256.0}, {256.0, 410.0}}};
  int harmonics = 6;           // capped below Nyquist
  double tilt = 1.0;           // harmonic k has amplitude k^-tilt
  double tiltJitter = 0.6;     // per-utterance uniform jitter of the tilt
  // Per-utterance random spectral envelope: standard deviation of a smooth
  // log-frequency ripple, in dB.
  double envelopeDepthDb = 10.0;
  double signalRms = 0.02;
  double floorRms = 2e-4;      // white floor so clean log energies stay bounded

  // Ratings on a 1..5 scale, midpoint 3. A majority of raters always agree
  // with the generating class; the rest rate uniformly at random.
  int raters = 5;

  double trainFraction = 0.6;
  double valFraction = 0.2;

  // Noise bank: band-limited colored noise per category.
  int noiseClipsPerCategory = 4;
  double noiseClipSec = 1.0;
  double noiseRms = 0.1;
  std::array<std::pair<double, double>, kNumNoiseCategories> noiseBands{
      {{60.0, 500.0}, {500.0, 2000.0}, {2000.0, 7000.0}}};
  // Amplitude spectrum slope: component amplitude ~ f^-exponent.
  std::array<double, kNumNoiseCategories> noiseColor{{1.0, 0.5, 0.0}};
  int noiseComponents = 400;
  // Slow random gain of each clip: standard deviation in dB of a smooth
  // process with components up to modulationHz. 0 = stationary.
  double noiseModulationDb = 0.0;
  double noiseModulationHz = 4.0;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

// Clean utterances in dialogue order with their manifest records.
struct Corpus {
  std::vector<Utterance> utterances;  // audio == cleanAudio
  std::vector<ManifestRecord> manifest;
  std::vector<int> classes;  // generating class (majority class when loaded)
};

// Tone complexes whose fundamental-frequency band encodes the class, with
// Markov label sequences inside each dialogue. Dialogues are assigned to
// train/val/test whole. Deterministic in cfg.
Corpus synthCorpus(const SynthConfig& cfg);

// Three spectrally disjoint colored noises standing in for the natural, human
// and interior categories.
NoiseBank synthNoiseBank(const SynthConfig& cfg);

// Writes audio/<id>.wav, noise/<category>/<k>.wav and manifest.jsonl under
// `dir`, with manifest paths relative to `dir`.
void writeCorpus(const std::string& dir, const Corpus& corpus,
                      const NoiseBank& bank);

// Reads <dir>/manifest.jsonl and the clean audio it references.
Corpus loadCorpus(const std::string& dir);

} // namespace hetcond
