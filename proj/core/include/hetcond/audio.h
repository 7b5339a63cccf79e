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

#include <cstdint>
#include <string>
#include <vector>

namespace hetcond {

struct Waveform {
  std::vector<double> samples;  // nominally in [-1, 1]
  int sampleRate = 16000;
  std::size_t clippedSamples = 0;  // set by mixing when |x| > 1 was clamped
};

// PCM 16-bit mono RIFF/WAVE only; anything else throws std::runtime_error
// naming the offending field.
Waveform readWav(const std::string& path);
void writeWav(const std::string& path, const Waveform& w);

// Root mean square; throws std::invalid_argument on an empty waveform.
double rms(const Waveform& w);
double rms(const std::vector<double>& samples);

struct MixResult {
  Waveform noisy;
  double scale = 0.0;  // factor applied to the aligned noise
  // 10 log10(P_signal / P_scaled_noise), measured before clipping.
  double measuredSnrDb = 0.0;
};

// Overlays `noise` on `signal` so that the signal-to-scaled-noise power ratio
// equals snrDb. Noise shorter than the signal is looped from a seeded offset;
// longer noise is cropped at a seeded offset. The mixture is clamped to
// [-1, 1] afterwards and the number of clamped samples recorded.
MixResult mixAtSnr(const Waveform& signal, const Waveform& noise, double snrDb,
                   std::uint64_t seed);

} // namespace hetcond
