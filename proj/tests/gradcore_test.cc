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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hetcond/checkpoint.h"
#include "hetcond/ops.h"
#include "hetcond/optim.h"
#include "test_util.h"

using namespace hetcond;
using hetcond::testing::finiteDifferenceCheck;
using hetcond::testing::randomTensor;

namespace {

// Direct-summation oracle: materialize the zero-padded signal, then take the
// dilated correlation window for every output frame.
Tensor naiveConvSame(const Tensor& x, const Tensor& w, const Tensor& b, int d) {
  const std::size_t T = x.shape[0], cin = x.shape[1];
  const std::size_t K = w.shape[0], cout = w.shape[2];
  const std::size_t span = (K - 1) * d;
  const std::size_t left = span / 2;
  std::vector<double> padded((T + span) * cin, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < cin; ++c) {
      padded[(t + left) * cin + c] = x.at(t, c);
    }
  }
  Tensor out({T, cout});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < cout; ++o) {
      double acc = b.data[o];
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t c = 0; c < cin; ++c) {
          acc += w.data[(k * cin + c) * cout + o] * padded[(t + k * d) * cin + c];
        }
      }
      out.at(t, o) = acc;
    }
  }
  return out;
}

Var column(std::initializer_list<double> v) {
  return Var::constant(Tensor({v.size(), 1}, std::vector<double>(v)));
}

} // namespace

TEST(Conv1dSame, ScalingKernel) {
  auto y = conv1dSame(column({1, 2, 3, 4}),
                      Var::constant(Tensor({1, 1, 1}, {2.0})),
                      Var::constant(Tensor({1}, {0.0})), 1);
  EXPECT_EQ(y.value().data, (std::vector<double>{2, 4, 6, 8}));
}

TEST(Conv1dSame, BoxKernelMatchesDirectSummation) {
  Tensor w({3, 1, 1}, {1.0, 1.0, 1.0});
  Tensor b({1}, {0.0});
  auto x = column({1, 2, 3, 4});
  auto y = conv1dSame(x, Var::constant(w), Var::constant(b), 1);
  EXPECT_EQ(y.value().data, (std::vector<double>{3, 6, 9, 7}));
  EXPECT_EQ(y.value().data, naiveConvSame(x.value(), w, b, 1).data);
}

TEST(Conv1dSame, ZeroKernelGivesZeros) {
  std::mt19937_64 rng(3);
  auto y = conv1dSame(Var::constant(randomTensor({9, 4}, rng)),
                      Var::constant(Tensor({5, 4, 2}, 0.0)),
                      Var::constant(Tensor({2}, 0.0)), 2);
  for (double v : y.value().data) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Conv1dSame, MatchesOracleAndPreservesLength) {
  std::mt19937_64 rng(11);
  const std::vector<std::pair<int, int>> combos = {
      {16, 1}, {16, 2}, {16, 4}, {3, 1}, {4, 3}, {1, 1}};
  for (auto [K, d] : combos) {
    for (std::size_t T : {1u, 5u, 23u, 64u}) {
      Tensor x = randomTensor({T, 3}, rng);
      Tensor w = randomTensor({static_cast<std::size_t>(K), 3, 2}, rng);
      Tensor b = randomTensor({2}, rng);
      auto y = conv1dSame(Var::constant(x), Var::constant(w), Var::constant(b), d);
      ASSERT_EQ(y.shape(), (Shape{T, 2})) << "K=" << K << " d=" << d;
      const Tensor ref = naiveConvSame(x, w, b, d);
      for (std::size_t i = 0; i < ref.data.size(); ++i) {
        EXPECT_NEAR(y.value().data[i], ref.data[i], 1e-12);
      }
    }
  }
}

TEST(Conv1dSame, RejectsChannelMismatch) {
  EXPECT_THROW(conv1dSame(Var::constant(Tensor({4, 3})),
                          Var::constant(Tensor({3, 2, 1})),
                          Var::constant(Tensor({1})), 1),
               std::invalid_argument);
  EXPECT_THROW(conv1dSame(Var::constant(Tensor({4, 2})),
                          Var::constant(Tensor({3, 2, 1})),
                          Var::constant(Tensor({1})), 0),
               std::invalid_argument);
}

TEST(MaxPool1d, Examples) {
  auto y = maxPool1d(column({1, 3, 2, 4, 5, 0, 0, 0}), 4, 4);
  EXPECT_EQ(y.value().data, (std::vector<double>{4, 5}));
  auto c = maxPool1d(column({7, 7, 7, 7, 7, 7}), 4, 4);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c.value().data, (std::vector<double>{7, 7}));
  // Partial trailing window.
  auto p = maxPool1d(column({1, 2, 3, 4, 9}), 4, 4);
  EXPECT_EQ(p.value().data, (std::vector<double>{4, 9}));
}

TEST(MaxPool1d, GradientGoesToFirstArgmaxOnTie) {
  auto x = Var::parameter(Tensor({4, 1}, {2.0, 5.0, 5.0, 1.0}));
  auto y = maxPool1d(x, 4, 4);
  backward(sumSquares(y));
  EXPECT_EQ(x.grad().data, (std::vector<double>{0.0, 10.0, 0.0, 0.0}));
}

TEST(MaxPool1d, FiniteDifferencesOnUntiedInputs) {
  std::mt19937_64 rng(5);
  auto x = Var::parameter(randomTensor({13, 3}, rng));
  auto r = finiteDifferenceCheck({x}, [&] { return sumSquares(maxPool1d(x, 4, 4)); });
  EXPECT_LT(r.maxRelError, 1e-6);
  EXPECT_LE(r.kinks * 10, r.checked);
}

TEST(Dense, Examples) {
  auto x = Var::constant(Tensor::matrix({{1, 2}}));
  auto eye = Var::constant(Tensor::matrix({{1, 0}, {0, 1}}));
  auto y = dense(x, eye, Var::constant(Tensor({2}, {1.0, 1.0})));
  EXPECT_EQ(y.value().data, (std::vector<double>{2, 3}));

  auto id = dense(x, eye, Var::constant(Tensor({2}, 0.0)));
  EXPECT_EQ(id.value().data, x.value().data);

  auto z = dense(Var::constant(Tensor::matrix({{1, 2}, {3, 4}})),
                 Var::constant(Tensor({2, 3}, 0.0)),
                 Var::constant(Tensor({3}, {0.5, -1.0, 2.0})));
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(std::vector<double>(z.value().row(r).begin(), z.value().row(r).end()),
              (std::vector<double>{0.5, -1.0, 2.0}));
  }
  EXPECT_THROW(dense(x, Var::constant(Tensor({3, 2})), Var::constant(Tensor({2}))),
               std::invalid_argument);
}

TEST(GradReverse, IdentityForwardNegatedBackward) {
  auto x = Var::parameter(Tensor({2}, {1.0, -2.0}));
  auto y = gradReverse(x, 1.0);
  EXPECT_EQ(y.value().data, (std::vector<double>{1.0, -2.0}));

  auto p = Var::parameter(Tensor({1}, {3.0}));
  backward(dotConstant(gradReverse(p, 1.0), Tensor({1}, {0.5})));
  EXPECT_EQ(p.grad().data, (std::vector<double>{-0.5}));

  auto q = Var::parameter(Tensor({1}, {3.0}));
  backward(dotConstant(gradReverse(q, 0.0), Tensor({1}, {0.5})));
  EXPECT_FALSE(q.hasGrad());
  EXPECT_EQ(q.grad().data, (std::vector<double>{0.0}));
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  auto loss = softmaxCrossEntropy(Var::constant(Tensor({1, 3}, 0.0)),
                                  Tensor::matrix({{1, 0, 0}}));
  EXPECT_NEAR(loss.value().data[0], std::log(3.0), 1e-12);
  EXPECT_NEAR(loss.value().data[0], 1.0986, 1e-4);
}

TEST(SoftmaxCrossEntropy, MinimumIsTargetEntropy) {
  const Tensor target = Tensor::matrix({{0.2, 0.5, 0.3}});
  Tensor logits({1, 3});
  for (std::size_t b = 0; b < 3; ++b) {
    logits.data[b] = std::log(target.data[b]) + 4.0;
  }
  double entropy = 0.0;
  for (double p : target.data) {
    entropy -= p * std::log(p);
  }
  auto loss = softmaxCrossEntropy(Var::constant(logits), target);
  EXPECT_NEAR(loss.value().data[0], entropy, 1e-12);
}

TEST(SoftmaxCrossEntropy, GradientIsSoftmaxMinusTarget) {
  std::mt19937_64 rng(7);
  auto logits = Var::parameter(randomTensor({2, 3}, rng, -3, 3));
  const Tensor target = Tensor::matrix({{0.25, 0.25, 0.5}, {1, 0, 0}});
  auto r = finiteDifferenceCheck(
      {logits}, [&] { return softmaxCrossEntropy(logits, target); });
  EXPECT_LT(r.maxRelError, 1e-6);
  EXPECT_LE(r.kinks * 10, r.checked);
  const Tensor p = softmaxRows(logits.value());
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(logits.grad().data[i], (p.data[i] - target.data[i]) / 2.0, 1e-12);
  }
}

TEST(SoftmaxCrossEntropy, RejectsNonDistributionTarget) {
  EXPECT_THROW(softmaxCrossEntropy(Var::constant(Tensor({1, 3})),
                                   Tensor::matrix({{0.5, 0.2, 0.2}})),
               std::invalid_argument);
  EXPECT_THROW(softmaxCrossEntropy(Var::constant(Tensor({1, 3})),
                                   Tensor::matrix({{1.5, -0.5, 0.0}})),
               std::invalid_argument);
}

TEST(SoftmaxRows, ValidDistributionsForExtremeLogits) {
  std::mt19937_64 rng(1);
  const Tensor p = softmaxRows(randomTensor({50, 5}, rng, -700, 700));
  for (std::size_t r = 0; r < 50; ++r) {
    double s = 0.0;
    for (double v : p.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  const Tensor q = softmaxRows(randomTensor({50, 5}, rng, -5, 5));
  for (double v : q.data) {
    EXPECT_GT(v, 0.0);
  }
}

TEST(Mse, Examples) {
  auto same = mse(Var::constant(Tensor({2}, {1.0, 2.0})), Tensor({2}, {1.0, 2.0}));
  EXPECT_EQ(same.value().data[0], 0.0);
  auto one = mse(Var::constant(Tensor({2}, 0.0)), Tensor({2}, {1.0, 1.0}));
  EXPECT_EQ(one.value().data[0], 1.0);

  auto p = Var::parameter(Tensor({3}, {0.5, -1.0, 2.0}));
  const Tensor target({3}, {0.0, 1.0, 1.0});
  backward(mse(p, target));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(p.grad().data[i], 2.0 * (p.value().data[i] - target.data[i]) / 3.0,
                1e-15);
  }
  EXPECT_THROW(mse(p, Tensor({2})), std::invalid_argument);
}

TEST(Backward, SumOfSquares) {
  auto x = Var::parameter(Tensor({2}, {1.0, 2.0}));
  backward(sumSquares(x));
  EXPECT_EQ(x.grad().data, (std::vector<double>{2.0, 4.0}));
}

TEST(Backward, FanOutSumsContributions) {
  auto x = Var::parameter(Tensor({2}, {1.0, 2.0}));
  auto a = scale(x, 3.0);
  auto b = sumSquares(x);
  std::vector<Var> parts = {dotConstant(a, Tensor({2}, 1.0)), b};
  std::vector<double> w = {1.0, 1.0};
  backward(weightedSum(parts, w));
  // d/dx (3x1 + 3x2 + x1^2 + x2^2) = 3 + 2x.
  EXPECT_EQ(x.grad().data, (std::vector<double>{5.0, 7.0}));

  // Each node is visited once even with a diamond.
  auto y = Var::parameter(Tensor({1}, {2.0}));
  auto s = scale(y, 2.0);
  auto diamond = add(s, s);
  EXPECT_EQ(backward(sumSquares(diamond)), 4u);
  EXPECT_EQ(y.grad().data[0], 2.0 * 8.0 * 2.0 * 2.0);
}

TEST(Backward, RejectsNonScalar) {
  auto x = Var::parameter(Tensor({2}, {1.0, 2.0}));
  EXPECT_THROW(backward(scale(x, 2.0)), std::invalid_argument);
}

TEST(Gradients, EveryOpMatchesFiniteDifferences) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    auto x = Var::parameter(randomTensor({9, 3}, rng));
    auto w = Var::parameter(randomTensor({4, 3, 2}, rng));
    auto b = Var::parameter(randomTensor({2}, rng));
    auto wt = Var::parameter(randomTensor({3, 2, 2}, rng));
    auto dw = Var::parameter(randomTensor({2, 5}, rng));
    auto db = Var::parameter(randomTensor({5}, rng));
    const Tensor target = randomTensor({18, 2}, rng);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Tensor dist({1, 5});
    for (auto& v : dist.data) v = u(rng);
    const double z = dist.sum();
    for (auto& v : dist.data) v /= z;

    auto lossFn = [&] {
      auto c = relu(conv1dSame(x, w, b, 2));
      auto up = convTranspose1d(c, wt, b, 2);
      auto recon = mse(up, target);
      auto pooled = meanPoolTime(maxPool1d(c, 4, 4));
      auto logits = dense(pooled, dw, db);
      auto ce = softmaxCrossEntropy(logits, dist);
      auto normed = rowNormalize(c);
      auto gram = sumSquares(matmul(transpose(normed), c));
      auto rows = std::vector<Var>{pooled, scale(pooled, -0.5)};
      auto stacked = concatCols(stackRows(rows), stackRows(rows));
      auto fit = fitRows(stacked, 3);
      std::vector<Var> parts = {recon, ce, gram, sumSquares(fit)};
      std::vector<double> wts = {1.0, 1.0, 0.01, 0.3};
      return weightedSum(parts, wts);
    };
    auto r = finiteDifferenceCheck({x, w, b, wt, dw, db}, lossFn);
    EXPECT_LT(r.maxRelError, 1e-4) << "seed " << seed;
    EXPECT_LE(r.kinks * 10, r.checked);
  }
}

TEST(Adadelta, ZeroGradientLeavesParameters) {
  auto p = Var::parameter(Tensor({3}, {0.1, -0.2, 0.3}));
  ParamSet ps;
  ps.add("p", p);
  AdadeltaState st;
  adadeltaStep(ps, st);
  EXPECT_EQ(p.value().data, (std::vector<double>{0.1, -0.2, 0.3}));
  for (double v : st.accGradSq.at(p.node())) EXPECT_EQ(v, 0.0);
  for (double v : st.accUpdateSq.at(p.node())) EXPECT_EQ(v, 0.0);
}

TEST(Adadelta, FirstStepClosedForm) {
  auto p = Var::parameter(Tensor({1}, {0.0}));
  ParamSet ps;
  ps.add("p", p);
  p.node()->accumulate(Tensor({1}, {1.0}));
  AdadeltaState st;  // rho 0.95, eps 1e-6, lr 1e-3
  adadeltaStep(ps, st);
  const double expected = -1e-3 * (std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6));
  EXPECT_NEAR(p.value().data[0], expected, 1e-18);
  EXPECT_NEAR(p.value().data[0], -4.472e-6, 1e-9);
  // The update accumulator tracks the unscaled step.
  const double native = expected / 1e-3;
  EXPECT_NEAR(st.accUpdateSq.at(p.node())[0], 0.05 * native * native, 1e-18);
}

TEST(Adadelta, StepOpposesGradientSign) {
  std::mt19937_64 rng(2);
  auto p = Var::parameter(randomTensor({64}, rng));
  ParamSet ps;
  ps.add("p", p);
  AdadeltaState st;
  for (int step = 0; step < 5; ++step) {
    const Tensor before = p.value();
    p.zeroGrad();
    Tensor g = randomTensor({64}, rng);
    p.node()->accumulate(g);
    adadeltaStep(ps, st);
    for (std::size_t i = 0; i < 64; ++i) {
      const double delta = p.value().data[i] - before.data[i];
      if (g.data[i] != 0.0) {
        EXPECT_EQ(std::signbit(delta), !std::signbit(g.data[i]));
      }
    }
  }
}

TEST(ClipWeights, ClampsAndIsIdempotent) {
  auto p = Var::parameter(Tensor({4}, {0.05, -0.2, 0.005, -0.01}));
  ParamSet ps;
  ps.add("p", p);
  clipWeights(ps, 0.01);
  EXPECT_EQ(p.value().data, (std::vector<double>{0.01, -0.01, 0.005, -0.01}));
  const auto once = p.value().data;
  clipWeights(ps, 0.01);
  EXPECT_EQ(p.value().data, once);
  EXPECT_THROW(clipWeights(ps, 0.0), std::invalid_argument);
}

TEST(Checkpoint, RoundTripAndLayout) {
  std::mt19937_64 rng(9);
  ParamSet ps;
  ps.add("enc.w", Var::parameter(randomTensor({3, 2, 4}, rng)));
  ps.add("enc.b", Var::parameter(randomTensor({4}, rng)));
  const auto path =
      (std::filesystem::temp_directory_path() / "hetcond_ckpt_test.bin").string();
  saveCheckpoint(path, ps, {{"maps", 4}});

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 8), "HCCKPT01");

  const Checkpoint ck = loadCheckpoint(path);
  EXPECT_EQ(ck.header.at("maps"), 4);
  ParamSet other;
  other.add("enc.w", Var::parameter(Tensor({3, 2, 4})));
  other.add("enc.b", Var::parameter(Tensor({4})));
  restoreParams(ck, other);
  EXPECT_EQ(other.checksum(), ps.checksum());

  ParamSet wrong;
  wrong.add("enc.b", Var::parameter(Tensor({5})));
  EXPECT_THROW(restoreParams(ck, wrong), std::runtime_error);
  std::remove(path.c_str());
}
