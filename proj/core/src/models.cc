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

#include "hetcond/models.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hetcond/ops.h"

namespace hetcond {

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"input_dim", c.inputDim}, {"channels", c.channels},
       {"kernel", c.kernel},      {"dilations", c.dilations},
       {"pool", c.pool}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.inputDim = j.value("input_dim", c.inputDim);
  c.channels = j.value("channels", c.channels);
  c.kernel = j.value("kernel", c.kernel);
  c.dilations = j.value("dilations", c.dilations);
  c.pool = j.value("pool", c.pool);
}

void to_json(nlohmann::json& j, const DecoderConfig& c) {
  j = {{"output_dim", c.outputDim}, {"kernel", c.kernel}, {"stride", c.stride}};
}

void from_json(const nlohmann::json& j, DecoderConfig& c) {
  c.outputDim = j.value("output_dim", c.outputDim);
  c.kernel = j.value("kernel", c.kernel);
  c.stride = j.value("stride", c.stride);
}

void to_json(nlohmann::json& j, const HeadConfig& c) {
  j = {{"hidden", c.hidden}};
}

void from_json(const nlohmann::json& j, HeadConfig& c) {
  c.hidden = j.value("hidden", c.hidden);
}

void to_json(nlohmann::json& j, const BaselineConfig& c) {
  j = {{"encoder", c.encoder},          {"decoder", c.decoder},
       {"head", c.head},                {"num_classes", c.numClasses},
       {"recon_weight", c.reconWeight}, {"use_decoder", c.useDecoder}};
}

void from_json(const nlohmann::json& j, BaselineConfig& c) {
  if (j.contains("encoder")) j.at("encoder").get_to(c.encoder);
  if (j.contains("decoder")) j.at("decoder").get_to(c.decoder);
  if (j.contains("head")) j.at("head").get_to(c.head);
  c.numClasses = j.value("num_classes", c.numClasses);
  c.reconWeight = j.value("recon_weight", c.reconWeight);
  c.useDecoder = j.value("use_decoder", c.useDecoder);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs}, {"batch_size", c.batchSize}, {"lr", c.lr},
       {"rho", c.rho},       {"epsilon", c.epsilon},      {"seed", c.seed},
       {"forbidden_condition", c.forbiddenCondition}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batchSize = j.value("batch_size", c.batchSize);
  c.lr = j.value("lr", c.lr);
  c.rho = j.value("rho", c.rho);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.seed = j.value("seed", c.seed);
  c.forbiddenCondition = j.value("forbidden_condition", c.forbiddenCondition);
}

Var glorotParameter(Shape shape, std::size_t fanIn, std::size_t fanOut,
                    Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fanIn + fanOut));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t(std::move(shape));
  for (auto& v : t.data) {
    v = u(rng);
  }
  return Var::parameter(std::move(t));
}

namespace {

Var zeroBias(int n) {
  return Var::parameter(Tensor({static_cast<std::size_t>(n)}));
}

void requirePositive(int v, const char* what) {
  if (v <= 0) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

} // namespace

FeatureEncoder::FeatureEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  requirePositive(cfg.inputDim, "encoder input_dim");
  requirePositive(cfg.channels, "encoder channels");
  requirePositive(cfg.kernel, "encoder kernel");
  requirePositive(cfg.pool, "encoder pool");
  if (cfg.dilations.empty()) {
    throw std::invalid_argument("encoder needs at least one conv layer");
  }
  const std::size_t K = cfg.kernel;
  const std::size_t C = cfg.channels;
  std::size_t cin = cfg.inputDim;
  for (std::size_t l = 0; l < cfg.dilations.size(); ++l) {
    requirePositive(cfg.dilations[l], "encoder dilation");
    kernels_.push_back(glorotParameter({K, cin, C}, K * cin, K * C, rng));
    biases_.push_back(zeroBias(cfg.channels));
    params_.add("conv" + std::to_string(l) + "/kernel", kernels_.back());
    params_.add("conv" + std::to_string(l) + "/bias", biases_.back());
    cin = C;
  }
}

Var FeatureEncoder::encode(const Var& features) const {
  const Tensor& x = features.value();
  if (x.shape.size() != 2 ||
      x.shape[1] != static_cast<std::size_t>(cfg_.inputDim)) {
    throw std::invalid_argument("encode: expected T x " +
                                std::to_string(cfg_.inputDim) + " features, got " +
                                shapeString(x.shape));
  }
  Var h = features;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    h = relu(conv1dSame(h, kernels_[l], biases_[l], cfg_.dilations[l]));
  }
  return maxPool1d(h, cfg_.pool, cfg_.pool);
}

std::size_t FeatureEncoder::outputLength(std::size_t frames) const {
  return (frames + cfg_.pool - 1) / cfg_.pool;
}

Decoder::Decoder(int inputChannels, const DecoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  requirePositive(inputChannels, "decoder input channels");
  requirePositive(cfg.outputDim, "decoder output_dim");
  requirePositive(cfg.kernel, "decoder kernel");
  requirePositive(cfg.stride, "decoder stride");
  const std::size_t K = cfg.kernel;
  const std::size_t C = inputChannels;
  const std::size_t D = cfg.outputDim;
  up1Kernel_ = glorotParameter({K, C, C}, K * C, K * C, rng);
  up1Bias_ = zeroBias(inputChannels);
  up2Kernel_ = glorotParameter({K, C, D}, K * C, K * D, rng);
  up2Bias_ = zeroBias(cfg.outputDim);
  outKernel_ = glorotParameter({K, D, D}, K * D, K * D, rng);
  outBias_ = zeroBias(cfg.outputDim);
  params_.add("up1/kernel", up1Kernel_);
  params_.add("up1/bias", up1Bias_);
  params_.add("up2/kernel", up2Kernel_);
  params_.add("up2/bias", up2Bias_);
  params_.add("out/kernel", outKernel_);
  params_.add("out/bias", outBias_);
}

Var Decoder::decode(const Var& encoding, std::size_t targetLength) const {
  Var h = relu(convTranspose1d(encoding, up1Kernel_, up1Bias_, cfg_.stride));
  h = relu(convTranspose1d(h, up2Kernel_, up2Bias_, cfg_.stride));
  h = conv1dSame(h, outKernel_, outBias_, 1);
  return fitRows(h, targetLength);
}

DenseHead::DenseHead(int inputDim, const HeadConfig& cfg, int outputs, Rng& rng)
    : outputs_(outputs) {
  requirePositive(inputDim, "head input");
  requirePositive(outputs, "head outputs");
  std::size_t in = inputDim;
  std::vector<int> widths = cfg.hidden;
  widths.push_back(outputs);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    requirePositive(widths[l], "head width");
    const std::size_t out = widths[l];
    weights_.push_back(glorotParameter({in, out}, in, out, rng));
    biases_.push_back(zeroBias(widths[l]));
    params_.add("dense" + std::to_string(l) + "/weights", weights_.back());
    params_.add("dense" + std::to_string(l) + "/bias", biases_.back());
    in = out;
  }
}

Var DenseHead::logits(const Var& x) const {
  Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = dense(h, weights_[l], biases_[l]);
    if (l + 1 < weights_.size()) {
      h = relu(h);
    }
  }
  return h;
}

Tensor targetMatrix(Batch batch) {
  Tensor t({batch.size(), static_cast<std::size_t>(kNumEmotionBins)});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (int k = 0; k < kNumEmotionBins; ++k) {
      t.at(i, k) = batch[i]->target[k];
    }
  }
  return t;
}

Var pooledEncodings(const FeatureEncoder& encoder, Batch batch) {
  if (batch.empty()) {
    throw std::invalid_argument("pooledEncodings: empty batch");
  }
  std::vector<Var> rows;
  rows.reserve(batch.size());
  for (const Example* e : batch) {
    rows.push_back(meanPoolTime(encoder.encode(*e->features)));
  }
  return stackRows(rows);
}

Tensor oneHot(std::span<const int> labels, int classes) {
  Tensor t({labels.size(), static_cast<std::size_t>(classes)});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw std::invalid_argument("oneHot: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(classes) + ")");
    }
    t.at(i, labels[i]) = 1.0;
  }
  return t;
}

std::vector<int> argmaxRows(const Tensor& m) {
  std::vector<int> out(m.rows());
  const std::size_t cols = m.cols();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = &m.data[r * cols];
    out[r] = static_cast<int>(std::max_element(row, row + cols) - row);
  }
  return out;
}

BaselineNetwork::BaselineNetwork(const BaselineConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      encoder_(cfg.encoder, makeRng(seed, "encoder")),
      classifier_(cfg.encoder.channels, cfg.head, cfg.numClasses,
                  makeRng(seed, "classifier")),
      decoder_(cfg.encoder.channels, cfg.decoder,
               makeRng(seed, "decoder")) {}

Var BaselineNetwork::reconstructionLoss(const FeatureEncoder& encoder,
                                        Batch batch) const {
  std::vector<Var> terms;
  std::vector<double> weights;
  for (const Example* e : batch) {
    if (e->clean == nullptr) {
      throw std::invalid_argument("reconstruction requires clean features");
    }
    Var h = encoder.encode(*e->features);
    terms.push_back(mse(decoder_.decode(h, e->features->rows()), *e->clean));
    weights.push_back(1.0 / static_cast<double>(batch.size()));
  }
  return weightedSum(terms, weights);
}

BaselineForward BaselineNetwork::forward(Batch batch) const {
  if (batch.empty()) {
    throw std::invalid_argument("BaselineNetwork::forward: empty batch");
  }
  const Tensor target = targetMatrix(batch);
  if (!cfg_.useDecoder || cfg_.reconWeight == 0.0) {
    Var pooled = pooledEncodings(encoder_, batch);
    return {pooled, softmaxCrossEntropy(classifier_.logits(pooled), target)};
  }
  // Share one encoder pass between both heads.
  std::vector<Var> pooled;
  std::vector<Var> terms;
  std::vector<double> weights;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const Example* e : batch) {
    if (e->clean == nullptr) {
      throw std::invalid_argument("reconstruction requires clean features");
    }
    Var h = encoder_.encode(*e->features);
    pooled.push_back(meanPoolTime(h));
    terms.push_back(mse(decoder_.decode(h, e->features->rows()), *e->clean));
    weights.push_back(cfg_.reconWeight * inv);
  }
  Var stacked = stackRows(pooled);
  terms.push_back(softmaxCrossEntropy(classifier_.logits(stacked), target));
  weights.push_back(1.0);
  return {stacked, weightedSum(terms, weights)};
}

Tensor BaselineNetwork::predict(Batch batch) const {
  return softmaxRows(classifier_.logits(pooledEncodings(encoder_, batch)).value());
}

ParamSet BaselineNetwork::params() const {
  ParamSet p;
  p.append(encoder_.params(), "encoder/");
  p.append(classifier_.params(), "classifier/");
  if (cfg_.useDecoder) {
    p.append(decoder_.params(), "decoder/");
  }
  return p;
}

NoisePredictor::NoisePredictor(const EncoderConfig& encoder,
                               const HeadConfig& head, int numConditions,
                               std::uint64_t seed)
    : encoder_(encoder, makeRng(seed, "encoder")),
      head_(encoder.channels, head, numConditions,
            makeRng(seed, "condition_head")) {
  if (numConditions < 2) {
    throw std::invalid_argument("NoisePredictor needs at least two conditions");
  }
}

Var NoisePredictor::loss(Batch batch) const {
  std::vector<int> labels;
  for (const Example* e : batch) {
    labels.push_back(e->condition);
  }
  return softmaxCrossEntropy(head_.logits(pooledEncodings(encoder_, batch)),
                             oneHot(labels, head_.outputs()));
}

Tensor NoisePredictor::predictProba(Batch batch) const {
  return softmaxRows(head_.logits(pooledEncodings(encoder_, batch)).value());
}

std::vector<int> NoisePredictor::predict(Batch batch) const {
  return argmaxRows(predictProba(batch));
}

ParamSet NoisePredictor::params() const {
  ParamSet p;
  p.append(encoder_.params(), "encoder/");
  p.append(head_.params(), "head/");
  return p;
}

AdadeltaState makeOptimizer(const TrainConfig& cfg) {
  AdadeltaState s;
  s.lr = cfg.lr;
  s.rho = cfg.rho;
  s.epsilon = cfg.epsilon;
  return s;
}

std::vector<std::vector<std::size_t>> epochBatches(std::size_t n,
                                                   std::size_t batchSize,
                                                   std::uint64_t seed,
                                                   int epoch) {
  if (batchSize == 0) {
    throw std::invalid_argument("batch size must be positive");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = makeRng(seed, "epoch_order", static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batchSize) {
    out.emplace_back(order.begin() + i,
                     order.begin() + std::min(n, i + batchSize));
  }
  return out;
}

std::vector<const Example*> gather(std::span<const Example> data,
                                   std::span<const std::size_t> indices) {
  std::vector<const Example*> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    out.push_back(&data[i]);
  }
  return out;
}

std::vector<const Example*> trainingBatch(std::span<const Example> data,
                                          std::span<const std::size_t> indices,
                                          const TrainConfig& cfg) {
  auto batch = gather(data, indices);
  if (cfg.forbiddenCondition >= 0) {
    for (const Example* e : batch) {
      if (e->condition == cfg.forbiddenCondition) {
        throw std::logic_error("held-out condition " +
                               std::to_string(cfg.forbiddenCondition) +
                               " reached a training batch");
      }
    }
  }
  return batch;
}

std::vector<double> trainLoop(std::span<const Example> data,
                              const ParamSet& params, const TrainConfig& cfg,
                              const std::function<Var(Batch)>& lossFn) {
  if (data.empty()) {
    throw std::invalid_argument("trainLoop: empty training set");
  }
  AdadeltaState opt = makeOptimizer(cfg);
  std::vector<double> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    const auto batches = epochBatches(data.size(), cfg.batchSize, cfg.seed, epoch);
    for (const auto& idx : batches) {
      const auto batch = trainingBatch(data, idx, cfg);
      params.zeroGrad();
      Var loss = lossFn(batch);
      backward(loss);
      adadeltaStep(params, opt);
      total += loss.value().data[0];
    }
    history.push_back(total / static_cast<double>(batches.size()));
  }
  return history;
}

NoisePredictor trainNoisePredictor(std::span<const Example> train,
                                   const EncoderConfig& encoder,
                                   const HeadConfig& head, int numConditions,
                                   const TrainConfig& cfg) {
  std::vector<bool> seen(numConditions, false);
  int distinct = 0;
  for (const auto& e : train) {
    if (e.condition < 0 || e.condition >= numConditions) {
      throw std::invalid_argument("trainNoisePredictor: condition label " +
                                  std::to_string(e.condition) + " out of range");
    }
    if (!seen[e.condition]) {
      seen[e.condition] = true;
      ++distinct;
    }
  }
  if (distinct < 2) {
    throw std::invalid_argument(
        "trainNoisePredictor: need at least two distinct condition labels");
  }
  NoisePredictor predictor(encoder, head, numConditions, cfg.seed);
  const ParamSet params = predictor.params();
  trainLoop(train, params, cfg,
            [&predictor](Batch b) { return predictor.loss(b); });
  return predictor;
}

} // namespace hetcond
