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

#include "hetcond/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "byteio.h"

namespace hetcond {

namespace {

constexpr char kMagic[8] = {'H', 'C', 'C', 'K', 'P', 'T', '0', '1'};

} // namespace

void saveCheckpoint(const std::string& path, const ParamSet& params,
                    const nlohmann::json& header) {
  std::string payload;
  nlohmann::json index;
  index["header"] = header;
  index["params"] = nlohmann::json::object();
  for (const auto& p : params.items()) {
    if (index["params"].contains(p.name)) {
      throw std::invalid_argument("saveCheckpoint: duplicate parameter " +
                                  p.name);
    }
    const Tensor& t = p.var.value();
    index["params"][p.name] = {{"offset", payload.size()},
                               {"rank", t.shape.size()},
                               {"count", t.data.size()}};
    for (auto d : t.shape) {
      appendU64LE(payload, d);
    }
    for (double v : t.data) {
      appendF64LE(payload, v);
    }
  }
  const std::string indexText = index.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("saveCheckpoint: cannot open " + path);
  }
  std::string head(kMagic, sizeof(kMagic));
  appendU64LE(head, indexText.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(indexText.data(), static_cast<std::streamsize>(indexText.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) {
    throw std::runtime_error("saveCheckpoint: write failed for " + path);
  }
}

Checkpoint loadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("loadCheckpoint: cannot open " + path);
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw std::runtime_error("loadCheckpoint: " + path +
                             " is not a checkpoint container");
  }
  const std::uint64_t indexLen = readU64LE(bytes, 8);
  if (16 + indexLen > bytes.size()) {
    throw std::runtime_error("loadCheckpoint: truncated index in " + path);
  }
  const auto index = nlohmann::json::parse(bytes.substr(16, indexLen));
  const std::size_t base = 16 + indexLen;

  Checkpoint ckpt;
  ckpt.header = index.value("header", nlohmann::json::object());
  for (const auto& [name, entry] : index.at("params").items()) {
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t rank = entry.at("rank").get<std::size_t>();
    const std::size_t count = entry.at("count").get<std::size_t>();
    const std::size_t begin = base + offset;
    if (begin + 8 * (rank + count) > bytes.size()) {
      throw std::runtime_error("loadCheckpoint: parameter " + name +
                               " runs past end of file");
    }
    Shape shape(rank);
    for (std::size_t i = 0; i < rank; ++i) {
      shape[i] = readU64LE(bytes, begin + 8 * i);
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = readF64LE(bytes, begin + 8 * (rank + i));
    }
    ckpt.tensors.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

void restoreParams(const Checkpoint& ckpt, const ParamSet& params) {
  for (const auto& p : params.items()) {
    auto it = ckpt.tensors.find(p.name);
    if (it == ckpt.tensors.end()) {
      throw std::runtime_error("restoreParams: checkpoint lacks " + p.name);
    }
    if (it->second.shape != p.var.value().shape) {
      throw std::runtime_error("restoreParams: shape mismatch for " + p.name +
                               ": " + shapeString(it->second.shape) + " vs " +
                               shapeString(p.var.value().shape));
    }
    p.var.node()->value = it->second;
  }
}

} // namespace hetcond
