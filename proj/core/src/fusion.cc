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

#include "hetcond/fusion.h"

#include <random>
#include <stdexcept>

#include "hetcond/ops.h"
#include "hetcond/rng.h"

namespace hetcond {

void Dialogue::validate() const {
  if (positions.size() != utteranceIds.size()) {
    throw std::invalid_argument("dialogue " + id + ": " +
                                std::to_string(utteranceIds.size()) + " ids but " +
                                std::to_string(positions.size()) + " positions");
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] != static_cast<int>(i)) {
      throw std::invalid_argument(
          "dialogue " + id + ": expected position " + std::to_string(i) +
          " at index " + std::to_string(i) + ", got " +
          std::to_string(positions[i]) + " (positions must be 0..n-1 in order)");
    }
  }
}

std::vector<double> pseudoLexicalEmbedding(const std::string& utteranceId,
                                           int textClass,
                                           const LexicalConfig& cfg) {
  if (cfg.dim <= 0) {
    throw std::invalid_argument("lexical dim must be positive");
  }
  if (textClass < 0 || textClass >= cfg.dim) {
    throw std::invalid_argument("text class out of range");
  }
  Rng rng = makeRng(cfg.seed, utteranceId);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(cfg.dim);
  for (auto& x : v) {
    x = n(rng);
  }
  v[textClass] += cfg.shift;
  return v;
}

void to_json(nlohmann::json& j, const FusionConfig& c) {
  j = {{"hidden", c.hidden},
       {"window", c.window},
       {"head", c.head},
       {"lexical_dim", c.lexical.dim},
       {"lexical_shift", c.lexical.shift}};
}

void from_json(const nlohmann::json& j, FusionConfig& c) {
  c.hidden = j.value("hidden", c.hidden);
  c.window = j.value("window", c.window);
  if (j.contains("head")) j.at("head").get_to(c.head);
  c.lexical.dim = j.value("lexical_dim", c.lexical.dim);
  c.lexical.shift = j.value("lexical_shift", c.lexical.shift);
  if (c.window < 0) {
    throw std::invalid_argument("fusion window must be >= 0");
  }
}

FusionNetwork::FusionNetwork(int acousticDim, const FusionConfig& cfg,
                             int numClasses, std::uint64_t seed)
    : cfg_(cfg),
      acousticDim_(acousticDim),
      head_(cfg.hidden, cfg.head, numClasses, makeRng(seed, "fusion_head")) {
  if (cfg.window < 0 || cfg.hidden <= 0 || acousticDim <= 0) {
    throw std::invalid_argument("FusionNetwork: invalid configuration");
  }
  Rng rng = makeRng(seed, "fusion");
  const std::size_t in = acousticDim + cfg.lexical.dim;
  const std::size_t h = cfg.hidden;
  const std::size_t k = 2 * cfg.window + 1;
  fuseWeights_ = glorotParameter({in, h}, in, h, rng);
  fuseBias_ = Var::parameter(Tensor({h}));
  contextKernel_ = glorotParameter({k, h, h}, k * h, k * h, rng);
  contextBias_ = Var::parameter(Tensor({h}));
}

Var FusionNetwork::logits(std::span<const Var> acoustic,
                          const Tensor& lexical) const {
  if (acoustic.empty()) {
    throw std::invalid_argument("FusionNetwork: empty dialogue");
  }
  if (lexical.shape.size() != 2 || lexical.rows() != acoustic.size() ||
      lexical.cols() != static_cast<std::size_t>(cfg_.lexical.dim)) {
    throw std::invalid_argument("FusionNetwork: lexical matrix " +
                                shapeString(lexical.shape) + " does not match " +
                                std::to_string(acoustic.size()) + " utterances");
  }
  std::vector<Var> rows;
  rows.reserve(acoustic.size());
  for (const Var& a : acoustic) {
    rows.push_back(a.value().rows() == 1 ? a : meanPoolTime(a));
  }
  const Var fused = concatCols(stackRows(rows), Var::constant(lexical));
  Var h = relu(dense(fused, fuseWeights_, fuseBias_));
  h = relu(conv1dSame(h, contextKernel_, contextBias_, 1));
  return head_.logits(h);
}

ParamSet FusionNetwork::params() const {
  ParamSet p;
  p.add("fuse/weights", fuseWeights_);
  p.add("fuse/bias", fuseBias_);
  p.add("context/kernel", contextKernel_);
  p.add("context/bias", contextBias_);
  p.append(head_.params(), "head/");
  return p;
}

Tensor fuseContext(const FusionNetwork& net, const Dialogue& dialogue,
                   std::span<const Var> acoustic, const Tensor& lexical) {
  dialogue.validate();
  if (acoustic.size() != dialogue.size()) {
    throw std::invalid_argument("fuseContext: " + std::to_string(acoustic.size()) +
                                " encodings for a dialogue of " +
                                std::to_string(dialogue.size()));
  }
  return softmaxRows(net.logits(acoustic, lexical).value());
}

std::vector<double> trainFusion(std::span<const DialogueSample> data,
                                const FusionNetwork& net, const TrainConfig& cfg) {
  if (data.empty()) {
    throw std::invalid_argument("trainFusion: no dialogues");
  }
  for (const auto& d : data) {
    d.dialogue.validate();
  }
  const ParamSet params = net.params();
  AdadeltaState opt = makeOptimizer(cfg);
  std::vector<double> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = epochBatches(data.size(), cfg.batchSize, cfg.seed, epoch);
    double total = 0.0;
    for (const auto& idx : batches) {
      std::size_t utterances = 0;
      for (auto i : idx) {
        utterances += data[i].dialogue.size();
      }
      std::vector<Var> terms;
      std::vector<double> weights;
      for (auto i : idx) {
        const auto& d = data[i];
        terms.push_back(softmaxCrossEntropy(net.logits(d.acoustic, d.lexical),
                                            d.targets));
        weights.push_back(static_cast<double>(d.dialogue.size()) /
                          static_cast<double>(utterances));
      }
      params.zeroGrad();
      Var loss = weightedSum(terms, weights);
      backward(loss);
      adadeltaStep(params, opt);
      total += loss.value().data[0];
    }
    history.push_back(total / static_cast<double>(batches.size()));
  }
  return history;
}

} // namespace hetcond
