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

#include "hetcond/adaptation.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hetcond/metrics.h"
#include "hetcond/ops.h"

namespace hetcond {

DomainIndex::DomainIndex(std::vector<int> conditions)
    : conditions_(std::move(conditions)) {
  std::set<int> unique(conditions_.begin(), conditions_.end());
  if (unique.size() != conditions_.size() || conditions_.empty()) {
    throw std::invalid_argument("DomainIndex: conditions must be distinct and non-empty");
  }
}

int DomainIndex::index(int condition) const {
  auto it = std::find(conditions_.begin(), conditions_.end(), condition);
  if (it == conditions_.end()) {
    throw std::invalid_argument("condition " + std::to_string(condition) +
                                " is not a training domain");
  }
  return static_cast<int>(it - conditions_.begin());
}

std::vector<int> DomainIndex::indices(Batch batch) const {
  std::vector<int> out;
  out.reserve(batch.size());
  for (const Example* e : batch) {
    out.push_back(index(e->condition));
  }
  return out;
}

void to_json(nlohmann::json& j, const DannConfig& c) {
  j = {{"lambda", c.lambda},
       {"warmup", c.warmup},
       {"warmup_fraction", c.warmupFraction},
       {"initial_lambda", c.initialLambda},
       {"domain_weight", c.domainWeight}};
}

void from_json(const nlohmann::json& j, DannConfig& c) {
  c.lambda = j.value("lambda", c.lambda);
  c.warmup = j.value("warmup", c.warmup);
  c.warmupFraction = j.value("warmup_fraction", c.warmupFraction);
  c.initialLambda = j.value("initial_lambda", c.initialLambda);
  c.domainWeight = j.value("domain_weight", c.domainWeight);
  if (c.lambda < 0.0 || c.initialLambda < 0.0) {
    throw std::invalid_argument("DANN lambda must be >= 0");
  }
}

double scheduledLambda(const DannConfig& cfg, int epoch, int epochs) {
  if (!cfg.warmup) {
    return cfg.lambda;
  }
  const int ramp = static_cast<int>(std::ceil(cfg.warmupFraction * epochs));
  if (ramp <= 0 || epoch >= ramp) {
    return cfg.lambda;
  }
  const double t = static_cast<double>(epoch) / ramp;
  return cfg.initialLambda + (cfg.lambda - cfg.initialLambda) * t;
}

DannNetwork::DannNetwork(const BaselineConfig& cfg, std::vector<int> domains,
                         std::uint64_t seed)
    : base_(cfg, seed),
      adversary_(cfg.encoder.channels, cfg.head,
                 static_cast<int>(domains.size()), makeRng(seed, "adversary")),
      domains_(std::move(domains)) {}

Var DannNetwork::loss(Batch batch, double lambda, double domainWeight) const {
  const BaselineForward fwd = base_.forward(batch);
  const auto idx = domains_.indices(batch);
  Var domainCe = softmaxCrossEntropy(
      adversary_.logits(gradReverse(fwd.pooled, lambda)),
      oneHot(idx, domains_.size()));
  const std::vector<Var> terms = {fwd.total, domainCe};
  const std::vector<double> weights = {1.0, domainWeight};
  return weightedSum(terms, weights);
}

ParamSet DannNetwork::params() const {
  ParamSet p = base_.params();
  p.append(adversary_.params(), "adversary/");
  return p;
}

std::vector<double> trainDann(std::span<const Example> data,
                              const DannNetwork& net, const TrainConfig& train,
                              const DannConfig& cfg) {
  if (data.empty()) {
    throw std::invalid_argument("trainDann: empty training set");
  }
  const ParamSet params = net.params();
  AdadeltaState opt = makeOptimizer(train);
  std::vector<double> history;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    const double lambda = scheduledLambda(cfg, epoch, train.epochs);
    const auto batches = epochBatches(data.size(), train.batchSize, train.seed, epoch);
    double total = 0.0;
    for (const auto& idx : batches) {
      const auto batch = trainingBatch(data, idx, train);
      params.zeroGrad();
      Var loss = net.loss(batch, lambda, cfg.domainWeight);
      backward(loss);
      adadeltaStep(params, opt);
      total += loss.value().data[0];
    }
    history.push_back(total / static_cast<double>(batches.size()));
  }
  return history;
}

void to_json(nlohmann::json& j, const MaddogConfig& c) {
  j = {{"clip", c.clip},
       {"critic_steps", c.criticSteps},
       {"critic_weight", c.criticWeight}};
}

void from_json(const nlohmann::json& j, MaddogConfig& c) {
  c.clip = j.value("clip", c.clip);
  c.criticSteps = j.value("critic_steps", c.criticSteps);
  c.criticWeight = j.value("critic_weight", c.criticWeight);
  if (c.clip <= 0.0) {
    throw std::invalid_argument("MADDoG clip must be positive");
  }
}

Tensor criticCoefficients(std::span<const int> domain, int numDomains) {
  const std::size_t n = domain.size();
  Tensor coeffs({n, static_cast<std::size_t>(numDomains)});
  for (int d = 0; d < numDomains; ++d) {
    const auto inside = static_cast<std::size_t>(
        std::count(domain.begin(), domain.end(), d));
    if (inside == 0 || inside == n) {
      continue;
    }
    const double in = 1.0 / static_cast<double>(inside);
    const double out = -1.0 / static_cast<double>(n - inside);
    for (std::size_t i = 0; i < n; ++i) {
      coeffs.at(i, d) = domain[i] == d ? in : out;
    }
  }
  return coeffs;
}

Var criticObjective(const Var& scores, std::span<const int> domain) {
  const Tensor& s = scores.value();
  if (s.shape.size() != 2 || s.rows() != domain.size()) {
    throw std::invalid_argument("criticObjective: scores " + shapeString(s.shape) +
                                " do not match " + std::to_string(domain.size()) +
                                " domain labels");
  }
  for (int d : domain) {
    if (d < 0 || static_cast<std::size_t>(d) >= s.cols()) {
      throw std::invalid_argument("criticObjective: domain label out of range");
    }
  }
  return dotConstant(scores, criticCoefficients(domain, static_cast<int>(s.cols())));
}

MaddogNetwork::MaddogNetwork(const BaselineConfig& cfg, std::vector<int> domains,
                             std::uint64_t seed)
    : base_(cfg, seed),
      critic_(cfg.encoder.channels, cfg.head, static_cast<int>(domains.size()),
              makeRng(seed, "critic")),
      domains_(std::move(domains)) {
  if (domains_.size() < 2) {
    throw std::invalid_argument("MADDoG needs at least two domains");
  }
}

Var MaddogNetwork::criticLoss(Batch batch) const {
  const Var fixed =
      Var::constant(pooledEncodings(base_.encoder(), batch).value());
  return scale(criticObjective(critic_.logits(fixed), domains_.indices(batch)),
               -1.0);
}

Var MaddogNetwork::mainLoss(Batch batch, double criticWeight) const {
  const BaselineForward fwd = base_.forward(batch);
  Var objective =
      criticObjective(critic_.logits(fwd.pooled), domains_.indices(batch));
  const std::vector<Var> terms = {fwd.total, objective};
  const std::vector<double> weights = {1.0, criticWeight};
  return weightedSum(terms, weights);
}

ParamSet MaddogNetwork::mainParams() const {
  return base_.params();
}

ParamSet MaddogNetwork::criticParams() const {
  ParamSet p;
  p.append(critic_.params(), "critic/");
  return p;
}

MaddogState makeMaddogState(const TrainConfig& train) {
  return {makeOptimizer(train), makeOptimizer(train)};
}

MaddogEpochStats maddogEpoch(std::span<const Example> data,
                             const MaddogNetwork& net, const TrainConfig& train,
                             const MaddogConfig& cfg, int epoch,
                             MaddogState& state) {
  if (cfg.clip <= 0.0) {
    throw std::invalid_argument("maddogEpoch: clip must be positive");
  }
  std::set<int> present;
  for (const auto& e : data) {
    present.insert(net.domains().index(e.condition));
  }
  if (present.size() < 2) {
    throw std::invalid_argument("maddogEpoch: fewer than two domains present");
  }
  const ParamSet critic = net.criticParams();
  const ParamSet main = net.mainParams();
  const auto batches = epochBatches(data.size(), train.batchSize, train.seed, epoch);
  MaddogEpochStats stats;

  const std::size_t steps =
      cfg.criticSteps > 0 ? static_cast<std::size_t>(cfg.criticSteps) : batches.size();
  for (std::size_t s = 0; s < steps; ++s) {
    const auto batch = trainingBatch(data, batches[s % batches.size()], train);
    critic.zeroGrad();
    Var loss = net.criticLoss(batch);
    backward(loss);
    adadeltaStep(critic, state.criticOpt);
    clipWeights(critic, cfg.clip);
    stats.criticObjective -= loss.value().data[0] / static_cast<double>(steps);
  }
  for (const auto& p : critic.items()) {
    for (double v : p.var.value().data) {
      stats.maxAbsCriticWeight = std::max(stats.maxAbsCriticWeight, std::abs(v));
    }
  }

  stats.criticChecksumBeforeMain = critic.checksum();
  for (const auto& idx : batches) {
    const auto batch = trainingBatch(data, idx, train);
    main.zeroGrad();
    Var loss = net.mainLoss(batch, cfg.criticWeight);
    backward(loss);
    adadeltaStep(main, state.mainOpt);
    stats.mainLoss += loss.value().data[0] / static_cast<double>(batches.size());
  }
  stats.criticChecksumAfterMain = critic.checksum();
  return stats;
}

void to_json(nlohmann::json& j, const DsnConfig& c) {
  j = {{"alpha", c.alpha},
       {"beta", c.beta},
       {"gamma", c.gamma},
       {"normalization",
        c.normalization == DsnNormalization::kMean ? "mean" : "l2"},
       {"adversary", c.adversary}};
}

void from_json(const nlohmann::json& j, DsnConfig& c) {
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  const std::string norm = j.value("normalization", std::string("mean"));
  if (norm == "mean") {
    c.normalization = DsnNormalization::kMean;
  } else if (norm == "l2") {
    c.normalization = DsnNormalization::kL2;
  } else {
    throw std::invalid_argument("DSN normalization must be 'mean' or 'l2', got '" +
                                norm + "'");
  }
  if (j.contains("adversary")) {
    j.at("adversary").get_to(c.adversary);
  }
}

Var differenceLoss(const Var& shared, const Var& priv) {
  if (shared.value().shape != priv.value().shape) {
    throw std::invalid_argument("differenceLoss: shape mismatch " +
                                shapeString(shared.value().shape) + " vs " +
                                shapeString(priv.value().shape));
  }
  // Rows are samples: the penalty sums squared cosines between every shared
  // and every private pooled encoding in the batch.
  return sumSquares(
      matmul(rowNormalize(shared), transpose(rowNormalize(priv))));
}

DsnNetwork::DsnNetwork(const BaselineConfig& cfg, std::vector<int> seenConditions,
                       const DsnConfig& dsn, std::uint64_t seed)
    : dsn_(dsn),
      shared_(cfg.encoder, makeRng(seed, "shared_encoder")),
      private_(seenConditions, cfg.encoder, deriveSeed(seed, "private_encoders")),
      decoder_(cfg.encoder.channels, cfg.decoder, makeRng(seed, "decoder")),
      classifier_(cfg.encoder.channels, cfg.head, cfg.numClasses,
                  makeRng(seed, "classifier")),
      adversary_(cfg.encoder.channels, cfg.head,
                 static_cast<int>(seenConditions.size()),
                 makeRng(seed, "adversary")),
      domains_(seenConditions) {}

Var DsnNetwork::combine(const Var& hs, const Var& hp) const {
  const Var sum = add(hs, hp);
  if (dsn_.normalization == DsnNormalization::kL2) {
    return rowNormalize(sum);
  }
  return scale(sum, 0.5);
}

DsnLosses DsnNetwork::losses(Batch batch, double lambda) const {
  if (batch.empty()) {
    throw std::invalid_argument("DsnNetwork::losses: empty batch");
  }
  std::vector<const Tensor*> features;
  std::vector<int> routing;
  for (const Example* e : batch) {
    if (!private_.contains(e->condition)) {
      throw std::invalid_argument("DSN sample with condition " +
                                  std::to_string(e->condition) +
                                  " has no private encoder");
    }
    features.push_back(e->features);
    routing.push_back(e->condition);
  }
  const std::vector<Var> hp = route(features, routing, private_);
  std::vector<Var> hs;
  std::vector<Var> pooledS;
  std::vector<Var> pooledP;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    hs.push_back(shared_.encode(*features[i]));
    pooledS.push_back(meanPoolTime(hs.back()));
    pooledP.push_back(meanPoolTime(hp[i]));
  }
  const Var hsMat = stackRows(pooledS);
  const Var hpMat = stackRows(pooledP);

  DsnLosses out;
  out.task = softmaxCrossEntropy(classifier_.logits(hsMat), targetMatrix(batch));
  if (dsn_.alpha != 0.0) {
    std::vector<Var> terms;
    const std::vector<double> w(batch.size(), 1.0 / static_cast<double>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i]->clean == nullptr) {
        throw std::invalid_argument("DSN reconstruction requires clean features");
      }
      terms.push_back(mse(decoder_.decode(combine(hs[i], hp[i]),
                                          features[i]->rows()),
                          *batch[i]->clean));
    }
    out.recon = weightedSum(terms, w);
  } else {
    out.recon = Var::constant(Tensor::scalar(0.0));
  }
  out.diff = differenceLoss(hsMat, hpMat);
  out.domain = softmaxCrossEntropy(adversary_.logits(gradReverse(hsMat, lambda)),
                                   oneHot(domains_.indices(batch), domains_.size()));
  const std::vector<Var> terms = {out.task, out.recon, out.diff, out.domain};
  const std::vector<double> weights = {1.0, dsn_.alpha, dsn_.beta, dsn_.gamma};
  out.total = weightedSum(terms, weights);
  return out;
}

Tensor DsnNetwork::predict(Batch batch) const {
  return softmaxRows(classifier_.logits(pooledEncodings(shared_, batch)).value());
}

ParamSet DsnNetwork::params() const {
  ParamSet p;
  p.append(shared_.params(), "shared/");
  p.append(private_.params(), "private/");
  p.append(decoder_.params(), "decoder/");
  p.append(classifier_.params(), "classifier/");
  p.append(adversary_.params(), "adversary/");
  return p;
}

std::vector<double> trainDsn(std::span<const Example> data,
                             const DsnNetwork& net, const TrainConfig& train) {
  if (data.empty()) {
    throw std::invalid_argument("trainDsn: empty training set");
  }
  const ParamSet params = net.params();
  AdadeltaState opt = makeOptimizer(train);
  std::vector<double> history;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    const double lambda =
        scheduledLambda(net.config().adversary, epoch, train.epochs);
    const auto batches = epochBatches(data.size(), train.batchSize, train.seed, epoch);
    double total = 0.0;
    for (const auto& idx : batches) {
      const auto batch = trainingBatch(data, idx, train);
      params.zeroGrad();
      Var loss = net.losses(batch, lambda).total;
      backward(loss);
      adadeltaStep(params, opt);
      total += loss.value().data[0];
    }
    history.push_back(total / static_cast<double>(batches.size()));
  }
  return history;
}

std::vector<Example> withoutCondition(std::span<const Example> data, int unseen) {
  std::vector<Example> out;
  for (const auto& e : data) {
    if (e.condition != unseen) {
      out.push_back(e);
    }
  }
  return out;
}

LeaveOneOutResult leaveOneOutRun(std::span<const Example> train,
                                 std::span<const Example> test,
                                 std::span<const int> conditions, int unseen,
                                 const MethodRunner& runner) {
  if (std::find(conditions.begin(), conditions.end(), unseen) == conditions.end()) {
    throw std::invalid_argument("leave-one-out: unseen condition " +
                                std::to_string(unseen) + " is not in the profile");
  }
  const std::vector<Example> trainSet = withoutCondition(train, unseen);
  std::set<int> trained;
  for (const auto& e : trainSet) {
    if (e.condition == unseen) {
      throw std::logic_error("leave-one-out: unseen sample in training set");
    }
    trained.insert(e.condition);
  }
  std::vector<int> seen;
  for (int c : conditions) {
    if (c != unseen) {
      seen.push_back(c);
    }
  }
  const std::vector<int> predicted = runner(trainSet, test, seen, unseen);
  if (predicted.size() != test.size()) {
    throw std::logic_error("leave-one-out: runner returned " +
                           std::to_string(predicted.size()) + " predictions for " +
                           std::to_string(test.size()) + " test samples");
  }
  std::vector<int> truthAll, predAll, truthSeen, predSeen, truthUnseen, predUnseen;
  for (std::size_t i = 0; i < test.size(); ++i) {
    truthAll.push_back(test[i].label);
    predAll.push_back(predicted[i]);
    auto& t = test[i].condition == unseen ? truthUnseen : truthSeen;
    auto& p = test[i].condition == unseen ? predUnseen : predSeen;
    t.push_back(test[i].label);
    p.push_back(predicted[i]);
  }
  LeaveOneOutResult r;
  r.unseen = unseen;
  r.trainSize = trainSet.size();
  r.trainConditions.assign(trained.begin(), trained.end());
  r.uarAll = uar(truthAll, predAll, kNumEmotionBins);
  r.uarSeen = truthSeen.empty() ? 0.0 : uar(truthSeen, predSeen, kNumEmotionBins);
  r.uarUnseen =
      truthUnseen.empty() ? 0.0 : uar(truthUnseen, predUnseen, kNumEmotionBins);
  return r;
}

std::vector<LeaveOneOutResult> leaveOneOutAll(std::span<const Example> train,
                                              std::span<const Example> test,
                                              std::span<const int> conditions,
                                              const MethodRunner& runner) {
  std::vector<LeaveOneOutResult> out;
  for (int c : conditions) {
    out.push_back(leaveOneOutRun(train, test, conditions, c, runner));
  }
  return out;
}

} // namespace hetcond
