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

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetcond/models.h"

namespace hetcond {

// Sub-batches keyed by condition. Indices across groups partition
// 0..batchSize-1 and are strictly increasing within a group.
template <typename T>
struct RoutedBatch {
  struct Group {
    std::vector<std::size_t> indices;
    std::vector<T> samples;
  };
  std::map<int, Group> groups;
  std::size_t batchSize = 0;
};

// Rejects labels outside `allowed` when it is non-empty.
template <typename T>
RoutedBatch<T> splitByCondition(std::span<const T> batch,
                                std::span<const int> labels,
                                std::span<const int> allowed = {}) {
  if (batch.size() != labels.size()) {
    throw std::invalid_argument(
        "splitByCondition: " + std::to_string(batch.size()) + " samples but " +
        std::to_string(labels.size()) + " labels");
  }
  RoutedBatch<T> out;
  out.batchSize = batch.size();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!allowed.empty() &&
        std::find(allowed.begin(), allowed.end(), labels[i]) == allowed.end()) {
      throw std::invalid_argument("splitByCondition: condition " +
                                  std::to_string(labels[i]) +
                                  " is not in the registry");
    }
    auto& g = out.groups[labels[i]];
    g.indices.push_back(i);
    g.samples.push_back(batch[i]);
  }
  return out;
}

// Places outputs[c][j] at position routed.groups[c].indices[j].
template <typename T, typename U>
std::vector<U> recombine(const std::map<int, std::vector<U>>& outputs,
                         const RoutedBatch<T>& routed) {
  if (outputs.size() != routed.groups.size()) {
    throw std::invalid_argument("recombine: group count mismatch");
  }
  std::vector<std::optional<U>> slots(routed.batchSize);
  for (const auto& [cond, group] : routed.groups) {
    auto it = outputs.find(cond);
    if (it == outputs.end()) {
      throw std::invalid_argument("recombine: no outputs for condition " +
                                  std::to_string(cond));
    }
    if (it->second.size() != group.indices.size()) {
      throw std::invalid_argument(
          "recombine: condition " + std::to_string(cond) + " has " +
          std::to_string(it->second.size()) + " outputs for " +
          std::to_string(group.indices.size()) + " samples");
    }
    for (std::size_t j = 0; j < group.indices.size(); ++j) {
      slots[group.indices[j]] = it->second[j];
    }
  }
  std::vector<U> out;
  out.reserve(slots.size());
  for (auto& s : slots) {
    out.push_back(std::move(*s));
  }
  return out;
}

// One encoder (and optionally one decoder) per condition of a closed set.
class ExpertRegistry {
 public:
  ExpertRegistry(std::vector<int> conditions, const EncoderConfig& encoder,
                 std::uint64_t seed, std::optional<DecoderConfig> decoder = {});

  bool contains(int condition) const;
  const std::vector<int>& conditions() const { return conditions_; }
  const FeatureEncoder& encoder(int condition) const;
  const Decoder& decoder(int condition) const;
  bool hasDecoders() const { return hasDecoders_; }

  // All expert parameters, prefixed "expert<c>/".
  ParamSet params() const;
  ParamSet params(int condition) const;

 private:
  struct Expert {
    std::unique_ptr<FeatureEncoder> encoder;
    std::unique_ptr<Decoder> decoder;
  };
  const Expert& expert(int condition) const;

  std::vector<int> conditions_;
  std::map<int, Expert> experts_;
  bool hasDecoders_ = false;
};

struct RouteOptions {
  bool parallel = false;  // one thread per group
};

// Encodes sample i with the expert for labels[i]; outputs keep input order.
std::vector<Var> route(std::span<const Tensor* const> batch,
                       std::span<const int> labels,
                       const ExpertRegistry& registry,
                       const RouteOptions& options = {});

// Dynamic layer customization: one expert encoder (and decoder, when the
// config enables reconstruction) per condition, all feeding a single shared
// emotion classifier. Training routes by Example::condition.
class DlcNetwork {
 public:
  DlcNetwork(const BaselineConfig& cfg, std::vector<int> conditions,
             std::uint64_t seed);

  BaselineForward forward(Batch batch) const;
  Var loss(Batch batch) const { return forward(batch).total; }
  // Routes sample i to the expert for routing[i].
  Tensor predict(Batch batch, std::span<const int> routing) const;

  const ExpertRegistry& experts() const { return experts_; }
  const DenseHead& classifier() const { return classifier_; }
  const BaselineConfig& config() const { return cfg_; }
  ParamSet params() const;

 private:
  BaselineConfig cfg_;
  ExpertRegistry experts_;
  DenseHead classifier_;
};

} // namespace hetcond
