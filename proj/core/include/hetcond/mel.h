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

#include <string>
#include <vector>

#include "hetcond/audio.h"
#include "hetcond/tensor.h"

namespace hetcond {

struct MelConfig {
  int sampleRate = 16000;
  int nMels = 40;
  int fftSize = 512;
  int windowLength = 400;  // 25 ms
  int hopLength = 160;     // 10 ms
  double fmin = 0.0;
  double fmax = 8000.0;
  double logFloor = 1e-10;

  // Throws std::invalid_argument when the configuration is inconsistent.
  void validate() const;
};

// HTK mel scale.
double hzToMel(double hz);
double melToHz(double mel);

// Triangular filters over the fftSize/2+1 magnitude bins. Filter m rises from
// edge m to a peak of 1 at edge m+1 and falls to zero at edge m+2, with
// nMels+2 edges evenly spaced in mel between fmin and fmax.
class MelFilterbank {
 public:
  explicit MelFilterbank(const MelConfig& cfg);

  const Tensor& weights() const { return weights_; }  // nMels x (fftSize/2+1)
  const std::vector<double>& centerHz() const { return centers_; }
  int numBins() const { return numBins_; }

 private:
  Tensor weights_;
  std::vector<double> centers_;
  int numBins_;
};

// |STFT| (Hann window, no centering) -> mel filterbank -> log(x + logFloor).
// Returns T x nMels with T = 1 + floor((len - window) / hop); throws
// std::invalid_argument when the waveform is shorter than one window or its
// sample rate differs from the configuration.
Tensor logMelSpectrogram(const Waveform& w, const MelConfig& cfg);

// Flat little-endian float32 matrix plus a JSON sidecar at path + ".json":
// {"shape": [T, 40], "utterance_id": ...}.
void writeFeatures(const std::string& path, const Tensor& features,
                   const std::string& utteranceId);
Tensor readFeatures(const std::string& path, std::string* utteranceId = nullptr);

} // namespace hetcond
