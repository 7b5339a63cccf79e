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

#include "hetcond/autodiff.h"
#include "hetcond/optim.h"
#include "hetcond/rng.h"
#include "hetcond/utterance.h"

namespace hetcond {

struct EncoderConfig {
  int inputDim = 40;
  int channels = 128;
  int kernel = 16;
  std::vector<int> dilations{1, 2, 4};
  int pool = 4;
};

struct DecoderConfig {
  int outputDim = 40;
  int kernel = 3;
  int stride = 2;
};

struct HeadConfig {
  std::vector<int> hidden{128, 128};
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const DecoderConfig& c);
void from_json(const nlohmann::json& j, DecoderConfig& c);
void to_json(nlohmann::json& j, const HeadConfig& c);
void from_json(const nlohmann::json& j, HeadConfig& c);

// Uniform in +-sqrt(6 / (fanIn + fanOut)).
Var glorotParameter(Shape shape, std::size_t fanIn, std::size_t fanOut, Rng& rng);

// Dilated same-length convolutions with ReLU, then max pooling:
// T x inputDim -> ceil(T / pool) x channels.
class FeatureEncoder {
 public:
  FeatureEncoder(const EncoderConfig& cfg, Rng& rng);
  FeatureEncoder(const EncoderConfig& cfg, Rng&& rng) : FeatureEncoder(cfg, rng) {}

  Var encode(const Var& features) const;
  Var encode(const Tensor& features) const { return encode(Var::constant(features)); }
  std::size_t outputLength(std::size_t frames) const;

  const EncoderConfig& config() const { return cfg_; }
  const ParamSet& params() const { return params_; }

 private:
  EncoderConfig cfg_;
  std::vector<Var> kernels_;
  std::vector<Var> biases_;
  ParamSet params_;
};

// Two stride-2 transposed convolutions (channels, then outputDim maps) and a
// final same-length convolution, cropped or zero-padded to the target length.
// The last layer is linear so it can reach negative log energies.
class Decoder {
 public:
  Decoder(int inputChannels, const DecoderConfig& cfg, Rng& rng);
  Decoder(int inputChannels, const DecoderConfig& cfg, Rng&& rng)
      : Decoder(inputChannels, cfg, rng) {}

  Var decode(const Var& encoding, std::size_t targetLength) const;

  const DecoderConfig& config() const { return cfg_; }
  const ParamSet& params() const { return params_; }

 private:
  DecoderConfig cfg_;
  Var up1Kernel_, up1Bias_, up2Kernel_, up2Bias_, outKernel_, outBias_;
  ParamSet params_;
};

// Dense stack with ReLU on hidden layers and linear logits.
class DenseHead {
 public:
  DenseHead(int inputDim, const HeadConfig& cfg, int outputs, Rng& rng);
  DenseHead(int inputDim, const HeadConfig& cfg, int outputs, Rng&& rng)
      : DenseHead(inputDim, cfg, outputs, rng) {}

  Var logits(const Var& x) const;
  int outputs() const { return outputs_; }
  const ParamSet& params() const { return params_; }

 private:
  std::vector<Var> weights_;
  std::vector<Var> biases_;
  int outputs_;
  ParamSet params_;
};

// One training or evaluation sample as seen by the networks.
struct Example {
  const Tensor* features = nullptr;  // T x 40, possibly noisy
  const Tensor* clean = nullptr;     // reconstruction target, same shape
  LabelBins target{1.0 / 3, 1.0 / 3, 1.0 / 3};
  int condition = -1;
  int label = 0;  // majority class, for recall
};

using Batch = std::span<const Example* const>;

// N x 3 soft target matrix.
Tensor targetMatrix(Batch batch);
// N x C matrix of time-pooled encodings, one row per sample.
Var pooledEncodings(const FeatureEncoder& encoder, Batch batch);
// N x K one-hot matrix for integer labels.
Tensor oneHot(std::span<const int> labels, int classes);
// Row-wise argmax.
std::vector<int> argmaxRows(const Tensor& m);

struct BaselineConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  HeadConfig head;
  int numClasses = kNumEmotionBins;
  double reconWeight = 1.0;
  bool useDecoder = true;
};

void to_json(nlohmann::json& j, const BaselineConfig& c);
void from_json(const nlohmann::json& j, BaselineConfig& c);

struct BaselineForward {
  Var pooled;  // N x C time-pooled encodings
  Var total;   // task CE plus weighted reconstruction
};

// Encoder feeding an emotion classifier and, optionally, a denoising decoder
// whose target is always the clean feature matrix.
class BaselineNetwork {
 public:
  BaselineNetwork(const BaselineConfig& cfg, std::uint64_t seed);

  // CE(classify(encode(x)), target) + reconWeight * mean_i MSE(decode_i, clean_i).
  BaselineForward forward(Batch batch) const;
  Var loss(Batch batch) const { return forward(batch).total; }
  Var reconstructionLoss(const FeatureEncoder& encoder, Batch batch) const;
  Tensor predict(Batch batch) const;  // N x numClasses probabilities

  const FeatureEncoder& encoder() const { return encoder_; }
  const DenseHead& classifier() const { return classifier_; }
  const Decoder& decoder() const { return decoder_; }
  const BaselineConfig& config() const { return cfg_; }
  ParamSet params() const;

 private:
  BaselineConfig cfg_;
  FeatureEncoder encoder_;
  DenseHead classifier_;
  Decoder decoder_;
};

// Encoder plus classifier over the noise conditions of one profile.
class NoisePredictor {
 public:
  NoisePredictor(const EncoderConfig& encoder, const HeadConfig& head,
                 int numConditions, std::uint64_t seed);

  Var loss(Batch batch) const;  // CE against Example::condition
  Tensor predictProba(Batch batch) const;
  std::vector<int> predict(Batch batch) const;

  const FeatureEncoder& encoder() const { return encoder_; }
  int numConditions() const { return head_.outputs(); }
  ParamSet params() const;

 private:
  FeatureEncoder encoder_;
  DenseHead head_;
};

struct TrainConfig {
  int epochs = 30;
  std::size_t batchSize = 32;
  double lr = 1e-3;
  double rho = 0.95;
  double epsilon = 1e-6;
  std::uint64_t seed = 0;
  // Condition that must never appear in a training batch (-1: none). Every
  // training loop checks each batch it assembles.
  int forbiddenCondition = -1;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

AdadeltaState makeOptimizer(const TrainConfig& cfg);

// Shuffled minibatches of indices into a dataset of size n for one epoch;
// the order depends only on (seed, epoch).
std::vector<std::vector<std::size_t>> epochBatches(std::size_t n,
                                                   std::size_t batchSize,
                                                   std::uint64_t seed, int epoch);

std::vector<const Example*> gather(std::span<const Example> data,
                                   std::span<const std::size_t> indices);

// gather() plus the forbidden-condition check; throws std::logic_error when a
// held-out sample would enter training.
std::vector<const Example*> trainingBatch(std::span<const Example> data,
                                          std::span<const std::size_t> indices,
                                          const TrainConfig& cfg);

// Plain minibatch Adadelta loop over lossFn; returns mean loss per epoch.
std::vector<double> trainLoop(
    std::span<const Example> data, const ParamSet& params,
    const TrainConfig& cfg, const std::function<Var(Batch)>& lossFn);

NoisePredictor trainNoisePredictor(std::span<const Example> train,
                                   const EncoderConfig& encoder,
                                   const HeadConfig& head, int numConditions,
                                   const TrainConfig& cfg);

} // namespace hetcond
