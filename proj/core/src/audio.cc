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

#include "hetcond/audio.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "byteio.h"

namespace hetcond {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

} // namespace

Waveform readWav(const std::string& path) {
  const std::string bytes = slurp(path);
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw std::runtime_error(path + ": not a RIFF/WAVE file");
  }
  Waveform w;
  bool haveFmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = readU32LE(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw std::runtime_error(path + ": chunk '" + id + "' is truncated");
    }
    if (id == "fmt ") {
      if (size < 16) {
        throw std::runtime_error(path + ": fmt chunk too small");
      }
      const std::uint16_t format = readU16LE(bytes, body);
      const std::uint16_t channels = readU16LE(bytes, body + 2);
      const std::uint32_t rate = readU32LE(bytes, body + 4);
      const std::uint16_t bits = readU16LE(bytes, body + 14);
      if (format != 1) {
        throw std::runtime_error(path + ": audio format " +
                                 std::to_string(format) +
                                 " is not PCM (expected 1)");
      }
      if (channels != 1) {
        throw std::runtime_error(path + ": " + std::to_string(channels) +
                                 " channels, expected mono");
      }
      if (bits != 16) {
        throw std::runtime_error(path + ": " + std::to_string(bits) +
                                 "-bit samples, expected 16-bit");
      }
      w.sampleRate = static_cast<int>(rate);
      haveFmt = true;
    } else if (id == "data") {
      if (!haveFmt) {
        throw std::runtime_error(path + ": data chunk precedes fmt chunk");
      }
      const std::size_t n = size / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto s = static_cast<std::int16_t>(readU16LE(bytes, body + 2 * i));
        w.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw std::runtime_error(path + ": no data chunk");
}

void writeWav(const std::string& path, const Waveform& w) {
  std::string body;
  body.reserve(w.samples.size() * 2);
  for (double s : w.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32767.0);
    appendU16LE(body, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  std::string out = "RIFF";
  appendU32LE(out, static_cast<std::uint32_t>(36 + body.size()));
  out += "WAVEfmt ";
  appendU32LE(out, 16);
  appendU16LE(out, 1);
  appendU16LE(out, 1);
  appendU32LE(out, static_cast<std::uint32_t>(w.sampleRate));
  appendU32LE(out, static_cast<std::uint32_t>(w.sampleRate * 2));
  appendU16LE(out, 2);
  appendU16LE(out, 16);
  out += "data";
  appendU32LE(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw std::runtime_error("cannot write " + path);
  }
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

double rms(const std::vector<double>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("rms: empty waveform");
  }
  double ss = 0.0;
  for (double s : samples) {
    ss += s * s;
  }
  return std::sqrt(ss / static_cast<double>(samples.size()));
}

double rms(const Waveform& w) {
  return rms(w.samples);
}

MixResult mixAtSnr(const Waveform& signal, const Waveform& noise, double snrDb,
                   std::uint64_t seed) {
  if (signal.samples.empty() || noise.samples.empty()) {
    throw std::invalid_argument("mixAtSnr: empty waveform");
  }
  if (signal.sampleRate != noise.sampleRate) {
    throw std::invalid_argument(
        "mixAtSnr: sample rate mismatch (" + std::to_string(signal.sampleRate) +
        " vs " + std::to_string(noise.sampleRate) + "); resampling unsupported");
  }
  const double signalRms = rms(signal);
  if (signalRms == 0.0) {
    throw std::invalid_argument("mixAtSnr: silent signal");
  }

  std::mt19937_64 rng(seed);
  const std::size_t n = signal.samples.size();
  const std::size_t m = noise.samples.size();
  std::vector<double> aligned(n);
  std::uniform_int_distribution<std::size_t> offsetDist(
      0, m > n ? m - n : m - 1);
  const std::size_t offset = offsetDist(rng);
  for (std::size_t i = 0; i < n; ++i) {
    aligned[i] = noise.samples[(offset + i) % m];
  }
  const double noiseRms = rms(aligned);
  if (noiseRms == 0.0) {
    throw std::invalid_argument("mixAtSnr: silent noise clip");
  }

  MixResult r;
  r.scale = (signalRms / noiseRms) * std::pow(10.0, -snrDb / 20.0);
  r.noisy.sampleRate = signal.sampleRate;
  r.noisy.samples.resize(n);
  double ps = 0.0;
  double pn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = r.scale * aligned[i];
    ps += signal.samples[i] * signal.samples[i];
    pn += scaled * scaled;
    r.noisy.samples[i] = signal.samples[i] + scaled;
  }
  r.measuredSnrDb = 10.0 * std::log10(ps / pn);
  for (auto& s : r.noisy.samples) {
    if (s > 1.0 || s < -1.0) {
      s = std::clamp(s, -1.0, 1.0);
      ++r.noisy.clippedSamples;
    }
  }
  return r;
}

} // namespace hetcond
