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

#include "hetcond/router.h"

#include <future>
#include <optional>

#include "hetcond/ops.h"

namespace hetcond {

ExpertRegistry::ExpertRegistry(std::vector<int> conditions,
                               const EncoderConfig& encoder, std::uint64_t seed,
                               std::optional<DecoderConfig> decoder)
    : conditions_(std::move(conditions)), hasDecoders_(decoder.has_value()) {
  if (conditions_.empty()) {
    throw std::invalid_argument("ExpertRegistry: empty condition set");
  }
  for (int c : conditions_) {
    if (experts_.count(c)) {
      throw std::invalid_argument("ExpertRegistry: duplicate condition " +
                                  std::to_string(c));
    }
    Expert e;
    const auto idx = static_cast<std::uint64_t>(c);
    e.encoder = std::make_unique<FeatureEncoder>(
        encoder, makeRng(seed, "expert_encoder", idx));
    if (decoder) {
      e.decoder = std::make_unique<Decoder>(
          encoder.channels, *decoder, makeRng(seed, "expert_decoder", idx));
    }
    experts_.emplace(c, std::move(e));
  }
}

bool ExpertRegistry::contains(int condition) const {
  return experts_.count(condition) > 0;
}

const ExpertRegistry::Expert& ExpertRegistry::expert(int condition) const {
  auto it = experts_.find(condition);
  if (it == experts_.end()) {
    throw std::invalid_argument("no expert registered for condition " +
                                std::to_string(condition));
  }
  return it->second;
}

const FeatureEncoder& ExpertRegistry::encoder(int condition) const {
  return *expert(condition).encoder;
}

const Decoder& ExpertRegistry::decoder(int condition) const {
  const Expert& e = expert(condition);
  if (!e.decoder) {
    throw std::logic_error("ExpertRegistry was built without decoders");
  }
  return *e.decoder;
}

ParamSet ExpertRegistry::params(int condition) const {
  const Expert& e = expert(condition);
  ParamSet p;
  p.append(e.encoder->params(), "encoder/");
  if (e.decoder) {
    p.append(e.decoder->params(), "decoder/");
  }
  return p;
}

ParamSet ExpertRegistry::params() const {
  ParamSet p;
  for (int c : conditions_) {
    p.append(params(c), "expert" + std::to_string(c) + "/");
  }
  return p;
}

std::vector<Var> route(std::span<const Tensor* const> batch,
                       std::span<const int> labels,
                       const ExpertRegistry& registry,
                       const RouteOptions& options) {
  const auto routed =
      splitByCondition<const Tensor*>(batch, labels, registry.conditions());
  auto encodeGroup = [&registry](int cond, const std::vector<const Tensor*>& xs) {
    const FeatureEncoder& enc = registry.encoder(cond);
    std::vector<Var> out;
    out.reserve(xs.size());
    for (const Tensor* x : xs) {
      out.push_back(enc.encode(*x));
    }
    return out;
  };
  std::map<int, std::vector<Var>> outputs;
  if (options.parallel && routed.groups.size() > 1) {
    std::map<int, std::future<std::vector<Var>>> pending;
    for (const auto& [cond, group] : routed.groups) {
      pending.emplace(cond, std::async(std::launch::async, encodeGroup, cond,
                                       std::cref(group.samples)));
    }
    for (auto& [cond, f] : pending) {
      outputs.emplace(cond, f.get());
    }
  } else {
    for (const auto& [cond, group] : routed.groups) {
      outputs.emplace(cond, encodeGroup(cond, group.samples));
    }
  }
  return recombine(outputs, routed);
}

DlcNetwork::DlcNetwork(const BaselineConfig& cfg, std::vector<int> conditions,
                       std::uint64_t seed)
    : cfg_(cfg),
      experts_(std::move(conditions), cfg.encoder, deriveSeed(seed, "experts"),
               cfg.useDecoder ? std::optional<DecoderConfig>(cfg.decoder)
                              : std::nullopt),
      classifier_(cfg.encoder.channels, cfg.head, cfg.numClasses,
                  makeRng(seed, "classifier")) {}

namespace {

std::vector<const Tensor*> featuresOf(Batch batch) {
  std::vector<const Tensor*> out;
  out.reserve(batch.size());
  for (const Example* e : batch) {
    out.push_back(e->features);
  }
  return out;
}

} // namespace

BaselineForward DlcNetwork::forward(Batch batch) const {
  if (batch.empty()) {
    throw std::invalid_argument("DlcNetwork::forward: empty batch");
  }
  std::vector<int> labels;
  for (const Example* e : batch) {
    labels.push_back(e->condition);
  }
  const auto features = featuresOf(batch);
  const auto encodings = route(features, labels, experts_);
  std::vector<Var> pooled;
  std::vector<Var> terms;
  std::vector<double> weights;
  const bool recon = cfg_.useDecoder && cfg_.reconWeight != 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    pooled.push_back(meanPoolTime(encodings[i]));
    if (recon) {
      if (batch[i]->clean == nullptr) {
        throw std::invalid_argument("reconstruction requires clean features");
      }
      const Decoder& dec = experts_.decoder(labels[i]);
      terms.push_back(mse(dec.decode(encodings[i], features[i]->rows()),
                          *batch[i]->clean));
      weights.push_back(cfg_.reconWeight * inv);
    }
  }
  Var stacked = stackRows(pooled);
  terms.push_back(
      softmaxCrossEntropy(classifier_.logits(stacked), targetMatrix(batch)));
  weights.push_back(1.0);
  return {stacked, weightedSum(terms, weights)};
}

Tensor DlcNetwork::predict(Batch batch, std::span<const int> routing) const {
  const auto encodings = route(featuresOf(batch), routing, experts_);
  std::vector<Var> pooled;
  for (const auto& h : encodings) {
    pooled.push_back(meanPoolTime(h));
  }
  return softmaxRows(classifier_.logits(stackRows(pooled)).value());
}

ParamSet DlcNetwork::params() const {
  ParamSet p;
  p.append(experts_.params(), "");
  p.append(classifier_.params(), "classifier/");
  return p;
}

} // namespace hetcond
