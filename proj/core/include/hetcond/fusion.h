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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetcond/models.h"

namespace hetcond {

// Utterance ids of one dialogue with their positions, which must be exactly
// 0..n-1 in order.
struct Dialogue {
  std::string id;
  std::vector<std::string> utteranceIds;
  std::vector<int> positions;

  // Throws std::invalid_argument on unordered, gapped or mismatched positions.
  void validate() const;
  std::size_t size() const { return utteranceIds.size(); }
};

struct LexicalConfig {
  int dim = 64;
  double shift = 0.5;  // class-conditional mean shift
  std::uint64_t seed = 0;
};

// Deterministic stand-in for a sentence embedding: standard normal noise
// seeded by (seed, id), plus `shift` on coordinate `textClass`. Weakly
// predictive of the class; identical ids give identical vectors.
std::vector<double> pseudoLexicalEmbedding(const std::string& utteranceId,
                                           int textClass,
                                           const LexicalConfig& cfg = {});

struct FusionConfig {
  int hidden = 32;
  int window = 1;  // neighbors on each side; temporal kernel is 2w+1
  HeadConfig head;
  LexicalConfig lexical;
};

void to_json(nlohmann::json& j, const FusionConfig& c);
void from_json(const nlohmann::json& j, FusionConfig& c);

// Per utterance: [pooled acoustic encoding, lexical vector] -> dense + ReLU,
// then a temporal convolution across utterance positions (zero padded at the
// dialogue edges) + ReLU, then a classifier head.
class FusionNetwork {
 public:
  FusionNetwork(int acousticDim, const FusionConfig& cfg, int numClasses,
                std::uint64_t seed);

  // `acoustic` holds one encoding per utterance in dialogue order, either
  // T' x C or already pooled 1 x C; `lexical` is n x lexicalDim.
  Var logits(std::span<const Var> acoustic, const Tensor& lexical) const;

  const FusionConfig& config() const { return cfg_; }
  ParamSet params() const;

 private:
  FusionConfig cfg_;
  int acousticDim_;
  Var fuseWeights_, fuseBias_, contextKernel_, contextBias_;
  DenseHead head_;
};

// Validates the dialogue, then returns per-utterance emotion distributions.
Tensor fuseContext(const FusionNetwork& net, const Dialogue& dialogue,
                   std::span<const Var> acoustic, const Tensor& lexical);

// One dialogue prepared for the context model: acoustic encodings in order
// (constants when the acoustic model is frozen), lexical rows and soft targets.
struct DialogueSample {
  Dialogue dialogue;
  std::vector<Var> acoustic;
  Tensor lexical;
  Tensor targets;  // n x numClasses
};

// Minibatches of whole dialogues; loss is the utterance-weighted mean CE.
std::vector<double> trainFusion(std::span<const DialogueSample> data,
                                const FusionNetwork& net, const TrainConfig& cfg);

} // namespace hetcond
