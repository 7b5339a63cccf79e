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

// Command-line front end: corpus synthesis, noising, featurization, training
// and evaluation.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "hetcond/experiment.h"
#include "hetcond/manifest.h"
#include "hetcond/mel.h"
#include "hetcond/metrics.h"
#include "hetcond/noise.h"
#include "hetcond/synth.h"

namespace fs = std::filesystem;
using namespace hetcond;

namespace {

ExperimentConfig loadConfig(const std::string& path) {
  ExperimentConfig cfg = ExperimentConfig::deskScale();
  if (path.empty()) {
    return cfg;
  }
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config " + path);
  }
  nlohmann::json j;
  in >> j;
  from_json(j, cfg);
  return cfg;
}

void writeJson(const std::string& path, const nlohmann::json& j) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << j.dump(2) << '\n';
}

std::string featureName(const std::string& id) { return id + ".f32"; }

void runSynth(const std::string& out, const std::string& configPath, int dialogues,
              int utterances, std::uint64_t seed) {
  SynthConfig cfg = loadConfig(configPath).synth;
  if (dialogues > 0) cfg.dialogues = dialogues;
  if (utterances > 0) cfg.utterancesPerDialogue = utterances;
  cfg.seed = seed;
  const Corpus corpus = synthCorpus(cfg);
  writeCorpus(out, corpus, synthNoiseBank(cfg));
  std::cout << "wrote " << corpus.utterances.size() << " utterances to " << out << '\n';
}

void runNoisify(const std::string& data, const std::string& manifestIn,
                const std::string& manifestOut, const std::string& profileName,
                std::uint64_t seed) {
  const NoiseProfile profile = NoiseProfile::byName(profileName);
  auto records = readManifest(manifestIn);
  std::vector<Utterance> utts;
  for (const auto& r : records) {
    if (r.condition) {
      throw std::invalid_argument(r.utteranceId + " is already noised");
    }
    Utterance u;
    u.id = r.utteranceId;
    u.cleanAudio = readWav((fs::path(data) / r.audioPath).string());
    u.audio = u.cleanAudio;
    utts.push_back(std::move(u));
  }
  const auto stats =
      applyProfile(utts, profile, loadNoiseBank((fs::path(data) / "noise").string()), seed);
  const fs::path dir = fs::path("noisy") / profileName;
  fs::create_directories(fs::path(data) / dir);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].audioPath = (dir / (records[i].utteranceId + ".wav")).string();
    records[i].condition = utts[i].condition;
    records[i].featurePath.clear();
    writeWav((fs::path(data) / records[i].audioPath).string(), utts[i].audio);
  }
  writeManifest(manifestOut, records);
  std::cout << "noised " << records.size() << " utterances with " << profileName
            << " (natural " << stats.categoryCounts[0] << ", human "
            << stats.categoryCounts[1] << ", interior " << stats.categoryCounts[2]
            << "; clipped samples " << stats.clippedSamples << ")\n";
}

void runFeaturize(const std::string& data, const std::string& manifestPath,
                  const std::string& tag) {
  auto records = readManifest(manifestPath);
  const MelConfig mel;
  const fs::path dir = fs::path("features") / tag;
  fs::create_directories(fs::path(data) / dir);
  for (auto& r : records) {
    if (r.condition && r.cleanFeaturePath.empty()) {
      throw std::invalid_argument(r.utteranceId +
                                  " is noised but has no clean_feature_path; "
                                  "featurize the clean manifest first");
    }
    const Tensor f = logMelSpectrogram(readWav((fs::path(data) / r.audioPath).string()), mel);
    r.featurePath = (dir / featureName(r.utteranceId)).string();
    writeFeatures((fs::path(data) / r.featurePath).string(), f, r.utteranceId);
    if (!r.condition) {
      r.cleanFeaturePath = r.featurePath;
    }
  }
  writeManifest(manifestPath, records);
  std::cout << "featurized " << records.size() << " utterances into " << dir.string()
            << '\n';
}

void printReport(const ExperimentReport& report, const std::string& out) {
  std::cout << report.table();
  if (!out.empty()) {
    writeJson(out, report);
    std::cout << "report written to " << out << '\n';
  }
}

void printTrial(const TrialResult& r) {
  std::cout << std::fixed << std::setprecision(2) << "UAR " << 100.0 * r.uar
            << "% (truth routing " << 100.0 * r.uarTruthRouting << "%)";
  if (r.predictorAccuracy > 0.0) {
    std::cout << ", condition predictor accuracy " << 100.0 * r.predictorAccuracy << "%";
  }
  std::cout << '\n';
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous noise-condition training for speech emotion recognition"};
  app.require_subcommand(1);

  std::string out, synthOut, configPath, data = "data", manifest, manifestOut, profile = "h1",
              tag = "clean", method = "single", routing, checkpoint, saveCheckpoint;
  int dialogues = 0, utterances = 0, experiment = 1, trials = 0;
  std::uint64_t seed = 0;
  bool seedSet = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and noise bank");
  synth->add_option("--out", synthOut, "Output directory")->default_val("data");
  synth->add_option("--config", configPath, "Experiment config (JSON) with a synth section");
  synth->add_option("--dialogues", dialogues, "Number of dialogues");
  synth->add_option("--utterances", utterances, "Utterances per dialogue");
  synth->add_option("--seed", seed, "Corpus seed");

  auto* noisify = app.add_subcommand("noisify", "Overlay noise according to a profile");
  noisify->add_option("--data", data, "Corpus directory")->default_val("data");
  noisify->add_option("--manifest", manifest, "Input manifest (default <data>/manifest.jsonl)");
  noisify->add_option("--out", manifestOut, "Output manifest (default <data>/manifest_<profile>.jsonl)");
  noisify->add_option("--profile", profile, "Noise profile")
      ->check(CLI::IsMember({"h1", "h2", "h3"}))
      ->required();
  noisify->add_option("--seed", seed, "Noise seed")->required();

  auto* featurize = app.add_subcommand("featurize", "Extract 40-band log Mel features");
  featurize->add_option("--data", data, "Corpus directory")->default_val("data");
  featurize->add_option("--manifest", manifest, "Manifest to featurize in place")->required();
  featurize->add_option("--tag", tag, "Feature subdirectory name")->default_val("clean");

  const auto addExperimentOptions = [&](CLI::App* cmd) {
    cmd->add_option("--config", configPath, "Experiment config (JSON)");
    cmd->add_option("--profile", profile, "Noise profile")
        ->check(CLI::IsMember({"h1", "h2", "h3"}));
    cmd->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
    cmd->add_option("--routing", routing, "Test-time routing labels")
        ->check(CLI::IsMember({"truth", "predictor"}));
    cmd->add_option("--data", data, "Corpus directory (default: synthesize in memory)");
    cmd->add_option("--seed", seed, "Master seed")->each([&](const std::string&) {
      seedSet = true;
    });
    cmd->add_option("--out", out, "Write the JSON report here");
  };

  auto* train = app.add_subcommand("train", "Run an experiment protocol for one method");
  train->add_option("--method", method, "Method")->required();
  train->add_option("--experiment", experiment, "1 (known conditions) or 2 (leave one out)")
      ->check(CLI::IsMember({1, 2}));
  train->add_option("--save-checkpoint", saveCheckpoint,
                    "Train trial 0 of experiment 1 and save the model here");
  addExperimentOptions(train);

  auto* evaluate = app.add_subcommand("evaluate", "Score a saved checkpoint on its test split");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();

  auto* predictNoise =
      app.add_subcommand("predict-noise", "Train and score the noise-condition predictor");
  addExperimentOptions(predictNoise);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto experimentConfig = [&] {
      ExperimentConfig cfg = loadConfig(configPath);
      cfg.method = method;
      cfg.experiment = experiment;
      if (!profile.empty()) cfg.profile = profile;
      if (trials > 0) cfg.trials = trials;
      if (!routing.empty()) cfg.routing = parseRouting(routing);
      if (seedSet) cfg.seed = seed;
      if (app.got_subcommand(train) && train->count("--data")) cfg.dataDir = data;
      if (app.got_subcommand(predictNoise) && predictNoise->count("--data")) {
        cfg.dataDir = data;
      }
      cfg.validate();
      return cfg;
    };

    if (*synth) {
      runSynth(synthOut, configPath, dialogues, utterances, seed);
    } else if (*noisify) {
      if (manifest.empty()) manifest = (fs::path(data) / "manifest.jsonl").string();
      if (manifestOut.empty()) {
        manifestOut = (fs::path(data) / ("manifest_" + profile + ".jsonl")).string();
      }
      runNoisify(data, manifest, manifestOut, profile, seed);
    } else if (*featurize) {
      runFeaturize(data, manifest, tag);
    } else if (*train) {
      const ExperimentConfig cfg = experimentConfig();
      if (!saveCheckpoint.empty()) {
        if (cfg.experiment != 1) {
          throw std::invalid_argument("--save-checkpoint requires --experiment 1");
        }
        printTrial(trainCheckpoint(cfg, saveCheckpoint));
        std::cout << "checkpoint written to " << saveCheckpoint << '\n';
      } else {
        printReport(runExperiment(cfg), out);
      }
    } else if (*evaluate) {
      printTrial(evaluateCheckpoint(checkpoint));
    } else if (*predictNoise) {
      const auto acc = noisePredictorAccuracy(experimentConfig());
      std::cout << std::fixed << std::setprecision(2);
      for (std::size_t t = 0; t < acc.size(); ++t) {
        std::cout << "trial " << t << ": condition accuracy " << 100.0 * acc[t] << "%\n";
      }
      std::cout << "mean: " << 100.0 * hetcond::mean(acc) << "%\n";
      if (!out.empty()) writeJson(out, nlohmann::json{{"accuracy", acc}});
    }
  } catch (const std::exception& e) {
    std::cerr << "hetcond: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
