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

// Little-endian byte packing shared by the container formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

namespace hetcond {

inline void appendU64LE(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

inline void appendU32LE(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

inline void appendU16LE(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void appendF64LE(std::string& out, double v) {
  appendU64LE(out, std::bit_cast<std::uint64_t>(v));
}

inline void appendF32LE(std::string& out, float v) {
  appendU32LE(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint64_t readU64LE(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i]))
         << (8 * i);
  }
  return v;
}

inline std::uint32_t readU32LE(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i]))
         << (8 * i);
  }
  return v;
}

inline std::uint16_t readU16LE(const std::string& in, std::size_t pos) {
  return static_cast<std::uint16_t>(
      static_cast<unsigned char>(in[pos]) |
      (static_cast<unsigned char>(in[pos + 1]) << 8));
}

inline double readF64LE(const std::string& in, std::size_t pos) {
  return std::bit_cast<double>(readU64LE(in, pos));
}

inline float readF32LE(const std::string& in, std::size_t pos) {
  return std::bit_cast<float>(readU32LE(in, pos));
}

} // namespace hetcond
