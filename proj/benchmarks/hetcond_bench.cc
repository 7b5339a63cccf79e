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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "hetcond/audio.h"
#include "hetcond/mel.h"
#include "hetcond/models.h"
#include "hetcond/ops.h"
#include "hetcond/router.h"

namespace hetcond {
namespace {

Tensor randomTensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.data) v = n(rng);
  return t;
}

Waveform randomWave(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.05);
  Waveform w;
  w.samples.resize(n);
  for (double& v : w.samples) v = g(rng);
  return w;
}

void BM_Conv1dForwardBackward(benchmark::State& state) {
  const std::size_t T = state.range(0);
  const std::size_t C = state.range(1);
  const Var x = Var::constant(randomTensor({T, 40}, 1));
  const Var k = Var::parameter(randomTensor({5, 40, C}, 2));
  const Var b = Var::parameter(Tensor({C}));
  for (auto _ : state) {
    Var y = sumSquares(conv1dSame(x, k, b, 2));
    backward(y);
    benchmark::DoNotOptimize(k.grad().data.data());
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Conv1dForwardBackward)->Args({100, 8})->Args({100, 32})->Args({400, 32});

void BM_LogMelSpectrogram(benchmark::State& state) {
  const Waveform w = randomWave(state.range(0), 3);
  const MelConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(logMelSpectrogram(w, cfg).data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogMelSpectrogram)->Arg(6400)->Arg(48000);

void BM_MixAtSnr(benchmark::State& state) {
  const Waveform s = randomWave(state.range(0), 4);
  const Waveform n = randomWave(16000, 5);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mixAtSnr(s, n, -5.0, ++seed).noisy.samples.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MixAtSnr)->Arg(6400)->Arg(48000);

void BM_RouteEncode(benchmark::State& state) {
  const std::size_t n = state.range(0);
  EncoderConfig enc;
  const ExpertRegistry registry({0, 1, 2}, enc, 7);
  std::vector<Tensor> storage;
  for (std::size_t i = 0; i < n; ++i) storage.push_back(randomTensor({40, 40}, 10 + i));
  std::vector<const Tensor*> batch;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back(&storage[i]);
    labels.push_back(static_cast<int>(i % 3));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(route(batch, labels, registry).data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RouteEncode)->Arg(16)->Arg(64);

void BM_BaselineTrainStep(benchmark::State& state) {
  BaselineConfig cfg;
  cfg.encoder.channels = static_cast<int>(state.range(0));
  const BaselineNetwork net(cfg, 11);
  std::vector<Tensor> storage;
  for (int i = 0; i < 32; ++i) storage.push_back(randomTensor({40, 40}, 100 + i));
  std::vector<Example> examples(16);
  std::vector<const Example*> batch;
  for (int i = 0; i < 16; ++i) {
    examples[i].features = &storage[2 * i];
    examples[i].clean = &storage[2 * i + 1];
    examples[i].condition = i % 3;
    batch.push_back(&examples[i]);
  }
  for (auto _ : state) {
    backward(net.loss(batch));
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_BaselineTrainStep)->Arg(8)->Arg(32);

} // namespace
} // namespace hetcond

BENCHMARK_MAIN();
