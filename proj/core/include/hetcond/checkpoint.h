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

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "hetcond/optim.h"

namespace hetcond {

// Parameter container file:
//
//   bytes 0..7    magic "HCCKPT01"
//   bytes 8..15   u64 LE length of the JSON index
//   JSON index    {"header": {...}, "params": {name: {"offset", "rank", "count"}}}
//   payload       per parameter at `offset` (relative to payload start):
//                 rank x u64 LE shape, then count x f64 LE data
//
// The header carries model hyperparameters.
struct Checkpoint {
  nlohmann::json header = nlohmann::json::object();
  std::map<std::string, Tensor> tensors;
};

void saveCheckpoint(const std::string& path, const ParamSet& params,
                    const nlohmann::json& header);
Checkpoint loadCheckpoint(const std::string& path);

// Copies stored values into `params`; every parameter must be present with a
// matching shape.
void restoreParams(const Checkpoint& ckpt, const ParamSet& params);

} // namespace hetcond
