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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetcond/models.h"
#include "hetcond/router.h"

namespace hetcond {

// Maps condition ids of the training-visible set to dense domain indices.
class DomainIndex {
 public:
  explicit DomainIndex(std::vector<int> conditions);

  int index(int condition) const;  // throws for conditions outside the set
  std::vector<int> indices(Batch batch) const;
  int size() const { return static_cast<int>(conditions_.size()); }
  const std::vector<int>& conditions() const { return conditions_; }

 private:
  std::vector<int> conditions_;
};

struct DannConfig {
  double lambda = 1.0;
  // Linear ramp from initialLambda to lambda over the first warmupFraction of
  // the epochs; disabled when warmup is false.
  bool warmup = true;
  double warmupFraction = 0.1;
  double initialLambda = 0.0;
  double domainWeight = 1.0;
};

void to_json(nlohmann::json& j, const DannConfig& c);
void from_json(const nlohmann::json& j, DannConfig& c);

// Lambda in effect for `epoch` (0-based) of `epochs`.
double scheduledLambda(const DannConfig& cfg, int epoch, int epochs);

// Baseline network plus a domain classifier behind a gradient reversal layer.
class DannNetwork {
 public:
  DannNetwork(const BaselineConfig& cfg, std::vector<int> domains,
              std::uint64_t seed);

  // Baseline loss + domainWeight * CE_domain(adversary(grl(pooled, lambda))).
  Var loss(Batch batch, double lambda, double domainWeight = 1.0) const;
  Tensor predict(Batch batch) const { return base_.predict(batch); }

  const BaselineNetwork& base() const { return base_; }
  const DenseHead& adversary() const { return adversary_; }
  const DomainIndex& domains() const { return domains_; }
  ParamSet params() const;

 private:
  BaselineNetwork base_;
  DenseHead adversary_;
  DomainIndex domains_;
};

std::vector<double> trainDann(std::span<const Example> data,
                              const DannNetwork& net, const TrainConfig& train,
                              const DannConfig& cfg);

struct MaddogConfig {
  double clip = 0.01;
  int criticSteps = 0;  // critic-only batches per epoch; 0 = one full pass
  double criticWeight = 1.0;
};

void to_json(nlohmann::json& j, const MaddogConfig& c);
void from_json(const nlohmann::json& j, MaddogConfig& c);

// Earth-mover style separation summed over domains:
//   sum_d [mean_{i in d} o_{i,d} - mean_{i not in d} o_{i,d}].
// Domains absent from the batch, or covering all of it, contribute nothing.
Var criticObjective(const Var& scores, std::span<const int> domain);
// The constant coefficient matrix used by criticObjective.
Tensor criticCoefficients(std::span<const int> domain, int numDomains);

// Baseline network plus a linear-output critic with one score per domain.
class MaddogNetwork {
 public:
  MaddogNetwork(const BaselineConfig& cfg, std::vector<int> domains,
                std::uint64_t seed);

  // Critic objective on fixed (non-differentiable) encodings.
  Var criticLoss(Batch batch) const;  // = -objective, for minimization
  // Baseline loss + criticWeight * objective through the frozen critic.
  Var mainLoss(Batch batch, double criticWeight) const;
  Tensor predict(Batch batch) const { return base_.predict(batch); }

  const BaselineNetwork& base() const { return base_; }
  const DenseHead& critic() const { return critic_; }
  const DomainIndex& domains() const { return domains_; }
  ParamSet mainParams() const;
  ParamSet criticParams() const;

 private:
  BaselineNetwork base_;
  DenseHead critic_;
  DomainIndex domains_;
};

struct MaddogState {
  AdadeltaState criticOpt;
  AdadeltaState mainOpt;
};

struct MaddogEpochStats {
  std::uint64_t criticChecksumBeforeMain = 0;
  std::uint64_t criticChecksumAfterMain = 0;
  double maxAbsCriticWeight = 0.0;  // after phase 1
  double criticObjective = 0.0;     // mean over phase-1 batches
  double mainLoss = 0.0;            // mean over phase-2 batches
};

// Phase 1 trains the critic alone with weight clipping after every step;
// phase 2 freezes it and updates encoder, classifier and decoder.
MaddogEpochStats maddogEpoch(std::span<const Example> data,
                             const MaddogNetwork& net, const TrainConfig& train,
                             const MaddogConfig& cfg, int epoch,
                             MaddogState& state);

MaddogState makeMaddogState(const TrainConfig& train);

enum class DsnNormalization { kMean, kL2 };

struct DsnConfig {
  double alpha = 1.0;   // reconstruction
  double beta = 0.05;   // difference
  double gamma = 0.25;  // similarity (adversarial)
  DsnNormalization normalization = DsnNormalization::kMean;
  DannConfig adversary;
};

void to_json(nlohmann::json& j, const DsnConfig& c);
void from_json(const nlohmann::json& j, DsnConfig& c);

// ||Hs' Hp'^T||_F^2 with Hs', Hp' the row-normalized N x C pooled encodings,
// i.e. the summed squared cosine between every shared/private pair.
Var differenceLoss(const Var& shared, const Var& priv);

struct DsnLosses {
  Var task;
  Var recon;
  Var diff;
  Var domain;
  Var total;
};

// Shared encoder, one private encoder per seen condition (reached through
// the router), a shared decoder on the combined encoding, and an adversary on
// the shared encoding. Prediction uses the shared encoder alone.
class DsnNetwork {
 public:
  DsnNetwork(const BaselineConfig& cfg, std::vector<int> seenConditions,
             const DsnConfig& dsn, std::uint64_t seed);

  DsnLosses losses(Batch batch, double lambda) const;
  Tensor predict(Batch batch) const;

  const FeatureEncoder& sharedEncoder() const { return shared_; }
  const ExpertRegistry& privateEncoders() const { return private_; }
  const Decoder& decoder() const { return decoder_; }
  const DenseHead& classifier() const { return classifier_; }
  const DenseHead& adversary() const { return adversary_; }
  const DsnConfig& config() const { return dsn_; }
  ParamSet params() const;

 private:
  Var combine(const Var& hs, const Var& hp) const;

  DsnConfig dsn_;
  FeatureEncoder shared_;
  ExpertRegistry private_;
  Decoder decoder_;
  DenseHead classifier_;
  DenseHead adversary_;
  DomainIndex domains_;
};

std::vector<double> trainDsn(std::span<const Example> data,
                             const DsnNetwork& net, const TrainConfig& train);

// Leave-one-condition-out protocol.
struct LeaveOneOutResult {
  int unseen = -1;
  double uarAll = 0.0;
  double uarSeen = 0.0;
  double uarUnseen = 0.0;
  std::size_t trainSize = 0;
  std::vector<int> trainConditions;  // distinct conditions actually trained on
};

// Trains on `train` (already free of the unseen condition) and returns
// predicted emotion classes for every element of `test`.
using MethodRunner = std::function<std::vector<int>(
    std::span<const Example> train, std::span<const Example> test,
    std::span<const int> seenConditions, int unseen)>;

// Training examples whose condition differs from `unseen`.
std::vector<Example> withoutCondition(std::span<const Example> data, int unseen);

LeaveOneOutResult leaveOneOutRun(std::span<const Example> train,
                                 std::span<const Example> test,
                                 std::span<const int> conditions, int unseen,
                                 const MethodRunner& runner);

// One run per condition, in the order given.
std::vector<LeaveOneOutResult> leaveOneOutAll(std::span<const Example> train,
                                              std::span<const Example> test,
                                              std::span<const int> conditions,
                                              const MethodRunner& runner);

} // namespace hetcond
