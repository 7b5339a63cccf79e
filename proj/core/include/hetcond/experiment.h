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
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetcond/adaptation.h"
#include "hetcond/fusion.h"
#include "hetcond/mel.h"
#include "hetcond/models.h"
#include "hetcond/synth.h"

namespace hetcond {

enum class Method {
  kNone,
  kSingle,
  kMulti,
  kMultiDlc,
  kDann,
  kMaddog,
  kDsnDlc,
  kFusionSingle,
  kFusionMultiDlc,
  kFusionDsnDlc,
};

// Names as used on the command line ("multi-DLC", "fusion-dsn-DLC", ...).
// "fusion-multi" is rejected: static per-condition datasets lose the
// dialogue order the context model needs.
Method parseMethod(const std::string& name);
std::string methodName(Method m);
bool isFusion(Method m);
// Methods whose test-time predictions depend on the routing labels.
bool usesRouting(Method m);

enum class RoutingSource { kTruth, kPredictor };

RoutingSource parseRouting(const std::string& name);
std::string routingName(RoutingSource r);

void to_json(nlohmann::json& j, const MelConfig& c);
void from_json(const nlohmann::json& j, MelConfig& c);

struct ExperimentConfig {
  std::string method = "single";
  std::string profile = "h1";
  int experiment = 1;
  int trials = 5;
  // Corpus directory written by `hetcond synth`; empty = synthesize in memory.
  std::string dataDir;
  std::uint64_t seed = 0;  // master seed; trial t uses deriveSeed(seed, t)
  RoutingSource routing = RoutingSource::kPredictor;
  bool standardize = true;  // per-band statistics of the training split
  bool parallelTrials = false;
  // "none" without a decoder (false) or trained on clean features only (true).
  bool noneTrainsOnClean = false;

  SynthConfig synth;
  MelConfig mel;
  BaselineConfig model;
  TrainConfig train;
  EncoderConfig predictorEncoder;
  HeadConfig predictorHead;
  TrainConfig predictorTrain;
  DannConfig dann;
  MaddogConfig maddog;
  DsnConfig dsn;
  FusionConfig fusion;
  TrainConfig fusionTrain;

  // Desk-scale defaults: narrow encoders and short schedules.
  static ExperimentConfig deskScale();
  // Throws std::invalid_argument on values outside the closed sets.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Missing keys keep their deskScale() values.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct TrialResult {
  std::uint64_t seed = 0;
  double uar = 0.0;             // routing from cfg.routing
  double uarTruthRouting = 0.0; // ground-truth routing where defined
  double predictorAccuracy = 0.0;
  std::vector<LeaveOneOutResult> perUnseen;  // experiment 2 only
};

struct ExperimentReport {
  int experiment = 1;
  std::string method;
  std::string profile;
  std::string routing;
  std::vector<TrialResult> trials;
  double mean = 0.0;
  double stddev = 0.0;
  double meanTruthRouting = 0.0;
  double meanPredictorAccuracy = 0.0;

  // Recomputes the summary fields from `trials`.
  void summarize();
  // Aligned text table: one row per (method, profile).
  std::string table() const;
};

void to_json(nlohmann::json& j, const ExperimentReport& r);
std::string reportTable(const std::vector<ExperimentReport>& reports);

// Features for one trial: noisy and clean matrices plus examples per split,
// in dialogue order.
struct PreparedData {
  std::deque<Tensor> storage;
  std::vector<Example> train;
  std::vector<Example> val;
  std::vector<Example> test;
  // Parallel to the example vectors.
  std::vector<std::string> trainIds, valIds, testIds;
  std::vector<std::string> trainDialogues, valDialogues, testDialogues;
};

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

FeatureStats featureStats(std::span<const Tensor* const> features);
void standardize(Tensor& features, const FeatureStats& stats);

// Noises the corpus with `profile` (seeded), extracts features and builds
// per-split examples. `cleanFeatures` are parallel to corpus.utterances.
PreparedData prepareTrial(const Corpus& corpus,
                          const std::vector<Tensor>& cleanFeatures,
                          const NoiseBank& bank, const NoiseProfile& profile,
                          std::uint64_t seed, const ExperimentConfig& cfg);

// A trained-or-trainable unimodal acoustic model behind one method. Fusion
// methods use the acoustic model of their base method.
class AcousticModel {
 public:
  virtual ~AcousticModel() = default;
  virtual void fit(std::span<const Example> train, const TrainConfig& cfg) = 0;
  // N x classes probabilities; routing[i] is the condition used for sample i
  // by routed methods and ignored otherwise.
  virtual Tensor predict(Batch batch, std::span<const int> routing) const = 0;
  // 1 x C time-pooled encoding fed to the context model.
  virtual Var encode(const Example& e, int route) const = 0;
  virtual int encodingDim() const = 0;
  virtual ParamSet params() const = 0;
};

std::unique_ptr<AcousticModel> makeAcousticModel(Method method,
                                                 const ExperimentConfig& cfg,
                                                 std::vector<int> seen,
                                                 std::uint64_t seed);

// Predictions for `test` from a model trained on `train` (conditions in
// `seen`). `routing` and `truthRouting` give a seen condition per test sample.
struct MethodPredictions {
  std::vector<int> routed;
  std::vector<int> truthRouted;
};

MethodPredictions runMethod(Method method, const ExperimentConfig& cfg,
                            const PreparedData& data,
                            std::span<const Example> train,
                            std::span<const int> seen,
                            std::span<const int> routing,
                            std::span<const int> truthRouting,
                            std::uint64_t seed);

ExperimentReport runExperiment1(const ExperimentConfig& cfg);
ExperimentReport runExperiment2(const ExperimentConfig& cfg);
// Dispatches on cfg.experiment.
ExperimentReport runExperiment(const ExperimentConfig& cfg);

// Trains trial 0 of experiment 1 for a unimodal method and writes the model,
// plus the condition predictor for routed methods, to `path`.
TrialResult trainCheckpoint(const ExperimentConfig& cfg, const std::string& path);
// Rebuilds that trial's data from the stored configuration and scores the
// stored model on its test split.
TrialResult evaluateCheckpoint(const std::string& path);

// Trains the condition predictor of each trial and reports test accuracy.
std::vector<double> noisePredictorAccuracy(const ExperimentConfig& cfg);

} // namespace hetcond
