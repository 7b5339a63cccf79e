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

#include "hetcond/synth.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "hetcond/rng.h"

namespace hetcond {

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"dialogues", c.dialogues},
                     {"utterances_per_dialogue", c.utterancesPerDialogue},
                     {"seed", c.seed},
                     {"sample_rate", c.sampleRate},
                     {"duration_sec", c.durationSec},
                     {"repeat_probability", c.repeatProbability},
                     {"f0_bands", c.f0Bands},
                     {"harmonics", c.harmonics},
                     {"tilt", c.tilt},
                     {"tilt_jitter", c.tiltJitter},
                     {"envelope_depth_db", c.envelopeDepthDb},
                     {"signal_rms", c.signalRms},
                     {"floor_rms", c.floorRms},
                     {"raters", c.raters},
                     {"train_fraction", c.trainFraction},
                     {"val_fraction", c.valFraction},
                     {"noise_clips_per_category", c.noiseClipsPerCategory},
                     {"noise_clip_sec", c.noiseClipSec},
                     {"noise_rms", c.noiseRms},
                     {"noise_bands", c.noiseBands},
                     {"noise_color", c.noiseColor},
                     {"noise_components", c.noiseComponents},
                     {"noise_modulation_db", c.noiseModulationDb},
                     {"noise_modulation_hz", c.noiseModulationHz}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  c.dialogues = j.value("dialogues", c.dialogues);
  c.utterancesPerDialogue = j.value("utterances_per_dialogue", c.utterancesPerDialogue);
  c.seed = j.value("seed", c.seed);
  c.sampleRate = j.value("sample_rate", c.sampleRate);
  c.durationSec = j.value("duration_sec", c.durationSec);
  c.repeatProbability = j.value("repeat_probability", c.repeatProbability);
  c.f0Bands = j.value("f0_bands", c.f0Bands);
  c.harmonics = j.value("harmonics", c.harmonics);
  c.tilt = j.value("tilt", c.tilt);
  c.tiltJitter = j.value("tilt_jitter", c.tiltJitter);
  c.envelopeDepthDb = j.value("envelope_depth_db", c.envelopeDepthDb);
  c.signalRms = j.value("signal_rms", c.signalRms);
  c.floorRms = j.value("floor_rms", c.floorRms);
  c.raters = j.value("raters", c.raters);
  c.trainFraction = j.value("train_fraction", c.trainFraction);
  c.valFraction = j.value("val_fraction", c.valFraction);
  c.noiseClipsPerCategory = j.value("noise_clips_per_category", c.noiseClipsPerCategory);
  c.noiseClipSec = j.value("noise_clip_sec", c.noiseClipSec);
  c.noiseRms = j.value("noise_rms", c.noiseRms);
  c.noiseBands = j.value("noise_bands", c.noiseBands);
  c.noiseColor = j.value("noise_color", c.noiseColor);
  c.noiseComponents = j.value("noise_components", c.noiseComponents);
  c.noiseModulationDb = j.value("noise_modulation_db", c.noiseModulationDb);
  c.noiseModulationHz = j.value("noise_modulation_hz", c.noiseModulationHz);
}

namespace {

void validate(const SynthConfig& cfg) {
  if (cfg.dialogues < 1 || cfg.utterancesPerDialogue < 1) {
    throw std::invalid_argument("synthCorpus: sizes must be >= 1");
  }
  if (cfg.raters < 1) {
    throw std::invalid_argument("synthCorpus: raters must be >= 1");
  }
  if (cfg.repeatProbability < 0.0 || cfg.repeatProbability > 1.0) {
    throw std::invalid_argument("synthCorpus: repeat_probability outside [0, 1]");
  }
  if (cfg.noiseModulationDb < 0.0 || !(cfg.noiseModulationHz > 0.0)) {
    throw std::invalid_argument("synthCorpus: invalid noise modulation");
  }
  const double nyquist = cfg.sampleRate / 2.0;
  for (const auto& [lo, hi] : cfg.noiseBands) {
    if (!(lo > 0.0 && lo < hi && hi <= nyquist)) {
      throw std::invalid_argument("synthCorpus: noise band outside (0, nyquist]");
    }
  }
}

// Adds amp * sin(w i + phase) using a rotating phasor instead of per-sample sin.
void addSinusoid(std::vector<double>& x, double amp, double w, double phase) {
  const std::complex<double> step = std::polar(1.0, w);
  std::complex<double> z = std::polar(amp, phase);
  for (auto& v : x) {
    v += z.imag();
    z *= step;
  }
}

void scaleToRms(std::vector<double>& x, double target) {
  const double r = rms(x);
  if (r > 0.0) {
    for (auto& v : x) v *= target / r;
  }
}

std::vector<double> toneComplex(double f0, double tilt, const SynthConfig& cfg,
                                Rng& rng) {
  const auto n = static_cast<std::size_t>(cfg.durationSec * cfg.sampleRate);
  std::vector<double> x(n, 0.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double nyquist = cfg.sampleRate / 2.0;
  // Random smooth envelope over log frequency (a few cosine ripples).
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<double, 3> ripple{}, ripplePhase{};
  for (std::size_t j = 0; j < ripple.size(); ++j) {
    ripple[j] = gauss(rng) / std::sqrt(3.0);
    ripplePhase[j] = phase(rng);
  }
  const double depth = cfg.envelopeDepthDb * std::log(10.0) / 20.0;
  const double span = std::log2(nyquist / 50.0);
  for (int k = 1; k <= cfg.harmonics && k * f0 < nyquist; ++k) {
    const double octave = std::log2(k * f0 / 50.0) / span;
    double env = 0.0;
    for (std::size_t j = 0; j < ripple.size(); ++j) {
      env += ripple[j] * std::cos(2.0 * std::numbers::pi * (j + 1) * octave + ripplePhase[j]);
    }
    const double amp = std::pow(static_cast<double>(k), -tilt) * std::exp(depth * env);
    const double w = 2.0 * std::numbers::pi * k * f0 / cfg.sampleRate;
    addSinusoid(x, amp, w, phase(rng));
  }
  // Raised-cosine onset and offset of 20 ms.
  const std::size_t ramp = std::min(n / 2, static_cast<std::size_t>(0.02 * cfg.sampleRate));
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
    x[i] *= g;
    x[n - 1 - i] *= g;
  }
  scaleToRms(x, cfg.signalRms);
  std::normal_distribution<double> floor(0.0, cfg.floorRms);
  for (auto& v : x) v += floor(rng);
  return x;
}

std::vector<double> ratingsFor(int cls, const SynthConfig& cfg, Rng& rng) {
  std::uniform_int_distribution<int> any(1, 5);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<double> r;
  const int agreeing = cfg.raters / 2 + 1;
  for (int i = 0; i < cfg.raters; ++i) {
    if (i < agreeing) {
      r.push_back(cls == 0 ? 1 + coin(rng) : (cls == 1 ? 3 : 4 + coin(rng)));
    } else {
      r.push_back(any(rng));
    }
  }
  return r;
}

} // namespace

Corpus synthCorpus(const SynthConfig& cfg) {
  validate(cfg);
  Corpus out;
  std::vector<int> order(cfg.dialogues);
  for (int d = 0; d < cfg.dialogues; ++d) order[d] = d;
  Rng splitRng = makeRng(cfg.seed, "splits");
  std::shuffle(order.begin(), order.end(), splitRng);
  std::vector<std::string> split(cfg.dialogues, "test");
  const auto nTrain = static_cast<int>(std::lround(cfg.trainFraction * cfg.dialogues));
  const auto nVal = static_cast<int>(std::lround(cfg.valFraction * cfg.dialogues));
  for (int k = 0; k < cfg.dialogues; ++k) {
    split[order[k]] = k < nTrain ? "train" : (k < nTrain + nVal ? "val" : "test");
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> anyClass(0, kNumEmotionBins - 1);
  for (int d = 0; d < cfg.dialogues; ++d) {
    Rng labelRng = makeRng(cfg.seed, "labels", d);
    char dialogueId[32];
    std::snprintf(dialogueId, sizeof(dialogueId), "d%04d", d);
    int cls = anyClass(labelRng);
    for (int i = 0; i < cfg.utterancesPerDialogue; ++i) {
      if (i > 0 && unit(labelRng) >= cfg.repeatProbability) {
        cls = anyClass(labelRng);
      }
      Rng rng = makeRng(cfg.seed, "utterance",
                        static_cast<std::uint64_t>(d) * cfg.utterancesPerDialogue + i);
      const auto [lo, hi] = cfg.f0Bands[cls];
      const double f0 = std::uniform_real_distribution<double>(lo, hi)(rng);
      const double tilt =
          cfg.tilt + std::uniform_real_distribution<double>(-cfg.tiltJitter,
                                                            cfg.tiltJitter)(rng);
      Utterance u;
      u.id = std::string(dialogueId) + "_u" + std::to_string(i);
      u.dialogueId = dialogueId;
      u.position = i;
      u.cleanAudio.sampleRate = cfg.sampleRate;
      u.cleanAudio.samples = toneComplex(f0, tilt, cfg, rng);
      u.audio = u.cleanAudio;
      const auto ratings = ratingsFor(cls, cfg, rng);
      u.labelBins = binRatings(ratings, 3.0);
      u.split = split[d];

      ManifestRecord rec;
      rec.utteranceId = u.id;
      rec.dialogueId = u.dialogueId;
      rec.position = i;
      rec.audioPath = "audio/" + u.id + ".wav";
      rec.ratings = ratings;
      rec.labelBins = u.labelBins;
      rec.split = u.split;

      out.utterances.push_back(std::move(u));
      out.manifest.push_back(std::move(rec));
      out.classes.push_back(cls);
    }
  }
  return out;
}

NoiseBank synthNoiseBank(const SynthConfig& cfg) {
  validate(cfg);
  NoiseBank bank;
  const auto n = static_cast<std::size_t>(cfg.noiseClipSec * cfg.sampleRate);
  for (NoiseCategory cat : kAllNoiseCategories) {
    const int c = categoryIndex(cat);
    const auto [lo, hi] = cfg.noiseBands[c];
    for (int k = 0; k < cfg.noiseClipsPerCategory; ++k) {
      Rng rng = makeRng(cfg.seed, "noise_bank",
                        static_cast<std::uint64_t>(c) * 1000 + k);
      std::uniform_real_distribution<double> freq(lo, hi);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      std::vector<double> x(n, 0.0);
      for (int m = 0; m < cfg.noiseComponents; ++m) {
        const double f = freq(rng);
        const double amp = std::pow(f, -cfg.noiseColor[c]);
        const double w = 2.0 * std::numbers::pi * f / cfg.sampleRate;
        addSinusoid(x, amp, w, phase(rng));
      }
      if (cfg.noiseModulationDb > 0.0) {
        // Unit-variance sum of 8 random low-frequency cosines, in dB.
        std::vector<double> g(n, 0.0);
        std::uniform_real_distribution<double> modFreq(0.25, cfg.noiseModulationHz);
        for (int m = 0; m < 8; ++m) {
          const double w = 2.0 * std::numbers::pi * modFreq(rng) / cfg.sampleRate;
          addSinusoid(g, 0.5, w, phase(rng));
        }
        for (std::size_t i = 0; i < n; ++i) {
          x[i] *= std::pow(10.0, cfg.noiseModulationDb * g[i] / 20.0);
        }
      }
      scaleToRms(x, cfg.noiseRms);
      bank[cat].push_back(Waveform{std::move(x), cfg.sampleRate, 0});
    }
  }
  return bank;
}

void writeCorpus(const std::string& dir, const Corpus& corpus,
                      const NoiseBank& bank) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "audio");
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    writeWav((fs::path(dir) / corpus.manifest[i].audioPath).string(),
             corpus.utterances[i].cleanAudio);
  }
  for (const auto& [cat, clips] : bank) {
    const fs::path sub = fs::path(dir) / "noise" / categoryName(cat);
    fs::create_directories(sub);
    for (std::size_t k = 0; k < clips.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "%03zu.wav", k);
      writeWav((sub / name).string(), clips[k]);
    }
  }
  writeManifest((fs::path(dir) / "manifest.jsonl").string(), corpus.manifest);
}

Corpus loadCorpus(const std::string& dir) {
  namespace fs = std::filesystem;
  Corpus out;
  out.manifest = readManifest((fs::path(dir) / "manifest.jsonl").string());
  for (const auto& rec : out.manifest) {
    if (rec.audioPath.empty()) {
      throw std::invalid_argument("loadCorpus: " + rec.utteranceId + " has no audio_path");
    }
    Utterance u;
    u.id = rec.utteranceId;
    u.dialogueId = rec.dialogueId;
    u.position = rec.position;
    u.cleanAudio = readWav((fs::path(dir) / rec.audioPath).string());
    u.audio = u.cleanAudio;
    u.labelBins = rec.bins();
    u.split = rec.split;
    out.classes.push_back(u.emotionClass());
    out.utterances.push_back(std::move(u));
  }
  // Keep dialogue order regardless of line order in the manifest.
  std::vector<std::size_t> order(out.utterances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ua = out.utterances[a];
    const auto& ub = out.utterances[b];
    return std::tie(ua.dialogueId, ua.position) < std::tie(ub.dialogueId, ub.position);
  });
  Corpus sorted;
  for (std::size_t i : order) {
    sorted.utterances.push_back(std::move(out.utterances[i]));
    sorted.manifest.push_back(std::move(out.manifest[i]));
    sorted.classes.push_back(out.classes[i]);
  }
  return sorted;
}

} // namespace hetcond
