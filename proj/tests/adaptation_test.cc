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

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.h"
#include "hetcond/adaptation.h"
#include "hetcond/metrics.h"
#include "hetcond/ops.h"

namespace hetcond {
namespace {

using testing::ExampleSet;
using testing::finiteDifferenceCheck;
using testing::leavesOf;
using testing::randomExamples;
using testing::tinyBaseline;

std::vector<Tensor> grads(const ParamSet& p) {
  std::vector<Tensor> out;
  for (const auto& item : p.items()) out.push_back(item.var.grad());
  return out;
}

double loss(const Var& v) { return v.value().data[0]; }

TEST(DannTest, ZeroLambdaMatchesBaselineGradients) {
  const ExampleSet data = randomExamples(6, 1);
  const auto batch = data.batch();
  BaselineNetwork base(tinyBaseline(), 42);
  DannNetwork dann(tinyBaseline(), {0, 1, 2}, 42);
  const ParamSet bp = base.params();
  const ParamSet dp = dann.params();
  ASSERT_EQ(bp.checksum(), dann.base().params().checksum());

  bp.zeroGrad();
  Var l1 = base.loss(batch);
  backward(l1);
  dp.zeroGrad();
  Var l2 = dann.loss(batch, 0.0);
  backward(l2);
  const auto gb = grads(bp);
  const auto gd = grads(dann.base().params());
  ASSERT_EQ(gb.size(), gd.size());
  for (std::size_t i = 0; i < gb.size(); ++i) {
    EXPECT_EQ(gb[i].data, gd[i].data) << bp.items()[i].name;
  }
  double adv = 0.0;
  for (const auto& g : grads(dann.adversary().params())) {
    for (double v : g.data) adv += std::abs(v);
  }
  EXPECT_GT(adv, 0.0);
}

TEST(DannTest, DomainBranchGradientIsNegatedAndScaled) {
  const ExampleSet data = randomExamples(4, 2);
  const auto batch = data.batch();
  DannNetwork dann(tinyBaseline(), {0, 1, 2}, 7);
  const FeatureEncoder& enc = dann.base().encoder();
  const Tensor target = oneHot(dann.domains().indices(batch), 3);
  const double lambda = 0.7;
  auto domainLoss = [&](bool reversed) {
    Var pooled = pooledEncodings(enc, batch);
    Var h = reversed ? gradReverse(pooled, lambda) : pooled;
    return softmaxCrossEntropy(dann.adversary().logits(h), target);
  };
  const ParamSet encParams = enc.params();
  encParams.zeroGrad();
  Var a = domainLoss(false);
  backward(a);
  const auto identity = grads(encParams);
  encParams.zeroGrad();
  Var b = domainLoss(true);
  backward(b);
  const auto reversed = grads(encParams);
  for (std::size_t i = 0; i < identity.size(); ++i) {
    for (std::size_t k = 0; k < identity[i].data.size(); ++k) {
      EXPECT_NEAR(reversed[i].data[k], -lambda * identity[i].data[k],
                  1e-12 * (1.0 + std::abs(identity[i].data[k])));
    }
  }
}

TEST(DannTest, LossMatchesFiniteDifferences) {
  const double lambda = 0.6;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ExampleSet data = randomExamples(2, 100 + seed);
    const auto batch = data.batch();
    DannNetwork dann(tinyBaseline(), {0, 1, 2}, seed);
    testing::randomizeBiases(dann.params(), seed);
    auto full = [&] { return dann.loss(batch, lambda); };
    // Encoder parameters see L_base - lambda * L_domain.
    auto encoderSurrogate = [&] {
      const double base = loss(dann.base().loss(batch));
      return base - lambda * (loss(dann.loss(batch, lambda)) - base);
    };
    const auto enc = finiteDifferenceCheck(leavesOf(dann.base().encoder().params()),
                                           full, encoderSurrogate, 1e-5, 15, seed);
    EXPECT_LT(enc.maxRelError, 1e-4) << "seed " << seed;
    EXPECT_LE(enc.kinks * 10, enc.checked);
    std::vector<Var> rest = leavesOf(dann.base().classifier().params());
    for (auto v : leavesOf(dann.base().decoder().params())) rest.push_back(v);
    for (auto v : leavesOf(dann.adversary().params())) rest.push_back(v);
    const auto other = finiteDifferenceCheck(rest, full, 1e-5, 15, seed);
    EXPECT_LT(other.maxRelError, 1e-4) << "seed " << seed;
    EXPECT_LE(other.kinks * 10, other.checked);
  }
}

TEST(DannTest, LambdaSchedule) {
  DannConfig cfg;
  EXPECT_DOUBLE_EQ(scheduledLambda(cfg, 0, 50), 0.0);
  EXPECT_DOUBLE_EQ(scheduledLambda(cfg, 1, 50), 0.2);
  EXPECT_DOUBLE_EQ(scheduledLambda(cfg, 5, 50), 1.0);
  EXPECT_DOUBLE_EQ(scheduledLambda(cfg, 49, 50), 1.0);
  cfg.warmup = false;
  cfg.lambda = 0.3;
  EXPECT_DOUBLE_EQ(scheduledLambda(cfg, 0, 50), 0.3);
  EXPECT_THROW(nlohmann::json({{"lambda", -1}}).get<DannConfig>(),
               std::invalid_argument);
}

TEST(MaddogTest, TwoDomainObjectiveByHand) {
  // Domains A = {0, 1}, B = {2, 3}.
  const Tensor scores = Tensor::matrix({{1.0, 5.0}, {3.0, -1.0}, {0.5, 2.0}, {-2.5, 4.0}});
  const std::vector<int> dom = {0, 0, 1, 1};
  // d=A: mean(1, 3) - mean(0.5, -2.5) = 2 - (-1) = 3
  // d=B: mean(2, 4) - mean(5, -1) = 3 - 2 = 1
  const Var obj = criticObjective(Var::constant(scores), dom);
  EXPECT_NEAR(loss(obj), 4.0, 1e-12);
  const Tensor c = criticCoefficients(dom, 2);
  EXPECT_EQ(c.data, (std::vector<double>{0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5, 0.5}));
  // A domain covering the whole batch contributes nothing.
  const std::vector<int> single = {1, 1, 1, 1};
  EXPECT_EQ(loss(criticObjective(Var::constant(scores), single)), 0.0);
}

TEST(MaddogTest, FreezeAndClipContracts) {
  const ExampleSet data = randomExamples(12, 3, {0, 1});
  MaddogNetwork net(tinyBaseline(), {0, 1}, 5);
  TrainConfig tc;
  tc.epochs = 4;
  tc.batchSize = 4;
  tc.lr = 1.0;
  MaddogConfig mc;
  MaddogState state = makeMaddogState(tc);
  const std::uint64_t mainBefore = net.mainParams().checksum();
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const auto stats = maddogEpoch(data.examples, net, tc, mc, epoch, state);
    EXPECT_EQ(stats.criticChecksumBeforeMain, stats.criticChecksumAfterMain);
    EXPECT_LE(stats.maxAbsCriticWeight, mc.clip);
    for (const auto& p : net.criticParams().items()) {
      for (double v : p.var.value().data) ASSERT_LE(std::abs(v), mc.clip);
    }
  }
  EXPECT_NE(net.mainParams().checksum(), mainBefore);
  const ExampleSet one = randomExamples(4, 4, {0});
  EXPECT_THROW(maddogEpoch(one.examples, net, tc, mc, 0, state),
               std::invalid_argument);
  EXPECT_THROW(MaddogNetwork(tinyBaseline(), {0}, 1), std::invalid_argument);
}

TEST(MaddogTest, PhaseObjectivesMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ExampleSet data = randomExamples(2, 200 + seed, {0, 1});
    const auto batch = data.batch();
    MaddogNetwork net(tinyBaseline(), {0, 1}, seed);
    testing::randomizeBiases(net.mainParams(), seed);
    testing::randomizeBiases(net.criticParams(), seed + 1);
    const auto critic = finiteDifferenceCheck(
        leavesOf(net.criticParams()), [&] { return net.criticLoss(batch); }, 1e-5,
        0, seed);
    EXPECT_LT(critic.maxRelError, 1e-4) << "seed " << seed;
    EXPECT_LE(critic.kinks * 10, critic.checked);
    const auto main = finiteDifferenceCheck(
        leavesOf(net.mainParams()), [&] { return net.mainLoss(batch, 1.0); }, 1e-5,
        15, seed);
    EXPECT_LT(main.maxRelError, 1e-4) << "seed " << seed;
    EXPECT_LE(main.kinks * 10, main.checked);
  }
}

TEST(DsnTest, DifferenceLossExamples) {
  const Var eye = Var::constant(Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_NEAR(loss(differenceLoss(eye, eye)), 2.0, 1e-12);
  const Var a = Var::constant(Tensor::matrix({{1, 0, 0}, {2, 0, 0}}));
  const Var b = Var::constant(Tensor::matrix({{0, 3, 1}, {0, -1, 4}}));
  EXPECT_NEAR(loss(differenceLoss(a, b)), 0.0, 1e-15);
  // Oracle: sum of squared cosines over all shared/private pairs.
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor hs = testing::randomTensor({3, 4}, rng);
    const Tensor hp = testing::randomTensor({3, 4}, rng);
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0, ni = 0, nj = 0;
        for (int c = 0; c < 4; ++c) {
          dot += hs.at(i, c) * hp.at(j, c);
          ni += hs.at(i, c) * hs.at(i, c);
          nj += hp.at(j, c) * hp.at(j, c);
        }
        expected += dot * dot / (ni * nj);
      }
    }
    const double base = loss(differenceLoss(Var::constant(hs), Var::constant(hp)));
    EXPECT_NEAR(base, expected, 1e-12);
    Tensor flipped = hs;
    for (int c = 0; c < 4; ++c) flipped.at(1, c) = -flipped.at(1, c);
    EXPECT_NEAR(loss(differenceLoss(Var::constant(flipped), Var::constant(hp))),
                base, 1e-12);
    Tensor flippedP = hp;
    for (int c = 0; c < 4; ++c) flippedP.at(2, c) = -flippedP.at(2, c);
    EXPECT_NEAR(loss(differenceLoss(Var::constant(hs), Var::constant(flippedP))),
                base, 1e-12);
  }
}

TEST(DsnTest, PerfectReconstructionHasZeroReconTerm) {
  ExampleSet data = randomExamples(3, 5, {0, 1});
  DsnNetwork net(tinyBaseline(), {0, 1}, DsnConfig{}, 3);
  // Replace each clean target with what the network reconstructs.
  for (auto& e : data.examples) {
    std::vector<const Example*> one = {&e};
    const Tensor* f = e.features;
    const Var hs = net.sharedEncoder().encode(*f);
    const Var hp = net.privateEncoders().encoder(e.condition).encode(*f);
    const Var combined = scale(add(hs, hp), 0.5);
    e.clean = &data.storage.emplace_back(
        net.decoder().decode(combined, f->rows()).value());
  }
  const auto l = net.losses(data.batch(), 1.0);
  EXPECT_EQ(loss(l.recon), 0.0);
}

TEST(DsnTest, UnroutedSampleRejected) {
  const ExampleSet data = randomExamples(3, 6, {0, 1, 2});
  DsnNetwork net(tinyBaseline(), {0, 1}, DsnConfig{}, 3);
  EXPECT_THROW(net.losses(data.batch(), 1.0), std::invalid_argument);
}

TEST(DsnTest, PredictionUsesSharedEncoderOnly) {
  const ExampleSet data = randomExamples(4, 8, {2, 2, 2, 2});
  DsnNetwork net(tinyBaseline(), {0, 1}, DsnConfig{}, 3);
  const Tensor before = net.predict(data.batch());
  for (const auto& p : net.privateEncoders().params().items()) {
    p.var.node()->value.fill(0.123);
  }
  EXPECT_EQ(net.predict(data.batch()).data, before.data);
}

TEST(DsnTest, LossesMatchFiniteDifferences) {
  const double lambda = 0.8;
  for (auto norm : {DsnNormalization::kMean, DsnNormalization::kL2}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const ExampleSet data = randomExamples(2, 300 + seed, {0, 1});
      const auto batch = data.batch();
      DsnConfig cfg;
      cfg.normalization = norm;
      DsnNetwork net(tinyBaseline(), {0, 1}, cfg, seed);
      testing::randomizeBiases(net.params(), seed);
      auto full = [&] { return net.losses(batch, lambda).total; };
      // The shared encoder sees the domain term with weight -lambda * gamma.
      auto sharedSurrogate = [&] {
        const auto l = net.losses(batch, lambda);
        return loss(l.total) - (1.0 + lambda) * cfg.gamma * loss(l.domain);
      };
      const auto shared = finiteDifferenceCheck(
          leavesOf(net.sharedEncoder().params()), full, sharedSurrogate, 1e-5, 15, seed);
      EXPECT_LT(shared.maxRelError, 1e-4) << "seed " << seed;
      EXPECT_LE(shared.kinks * 10, shared.checked);
      std::vector<Var> rest = leavesOf(net.privateEncoders().params());
      for (auto v : leavesOf(net.decoder().params())) rest.push_back(v);
      for (auto v : leavesOf(net.classifier().params())) rest.push_back(v);
      for (auto v : leavesOf(net.adversary().params())) rest.push_back(v);
      const auto other = finiteDifferenceCheck(rest, full, 1e-5, 15, seed);
      EXPECT_LT(other.maxRelError, 1e-4) << "seed " << seed;
      EXPECT_LE(other.kinks * 10, other.checked);
    }
  }
}

TEST(LeaveOneOutTest, TrainingNeverSeesUnseenCondition) {
  const ExampleSet train = randomExamples(30, 10);
  const ExampleSet test = randomExamples(9, 11);
  const std::vector<int> conditions = {0, 1, 2};
  int calls = 0;
  auto runner = [&](std::span<const Example> tr, std::span<const Example> te,
                    std::span<const int> seen, int unseen) {
    ++calls;
    EXPECT_EQ(seen.size(), 2u);
    for (const auto& e : tr) EXPECT_NE(e.condition, unseen);
    std::vector<int> pred;
    for (const auto& e : te) pred.push_back(e.label);
    return pred;
  };
  const auto results = leaveOneOutAll(train.examples, test.examples, conditions, runner);
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(results[0].trainConditions, (std::vector<int>{1, 2}));
  EXPECT_EQ(results[1].trainConditions, (std::vector<int>{0, 2}));
  EXPECT_EQ(results[2].trainConditions, (std::vector<int>{0, 1}));
  EXPECT_EQ(results[0].trainSize, 20u);
  EXPECT_DOUBLE_EQ(results[0].uarAll, 1.0);
  EXPECT_THROW(leaveOneOutRun(train.examples, test.examples, conditions, 3, runner),
               std::invalid_argument);
}

TEST(LeaveOneOutTest, LoaderRejectsHeldOutSamples) {
  const ExampleSet data = randomExamples(6, 12);
  TrainConfig tc;
  tc.forbiddenCondition = 1;
  const std::vector<std::size_t> ok = {0, 2, 3};
  EXPECT_NO_THROW(trainingBatch(data.examples, ok, tc));
  const std::vector<std::size_t> leak = {0, 1};
  EXPECT_THROW(trainingBatch(data.examples, leak, tc), std::logic_error);
  BaselineNetwork net(tinyBaseline(), 1);
  tc.epochs = 1;
  EXPECT_THROW(trainLoop(data.examples, net.params(), tc,
                         [&](Batch b) { return net.loss(b); }),
               std::logic_error);
}

TEST(LeaveOneOutTest, MeanOfRuns) {
  const std::vector<double> uars = {0.50, 0.52, 0.54};
  EXPECT_NEAR(mean(uars), 0.52, 1e-15);
}

} // namespace
} // namespace hetcond
