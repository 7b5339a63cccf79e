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

#include "hetcond/mel.h"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "byteio.h"

namespace hetcond {

namespace {

// FFTW planning is not thread safe; execution with new-array functions is.
std::mutex& planMutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(planMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(planMutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  const fftw_complex* output() const { return out_; }
  void execute() { fftw_execute(plan_); }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

} // namespace

void MelConfig::validate() const {
  if (sampleRate <= 0 || nMels <= 0 || fftSize <= 0 || windowLength <= 0 ||
      hopLength <= 0) {
    throw std::invalid_argument("MelConfig: sizes must be positive");
  }
  if (windowLength > fftSize) {
    throw std::invalid_argument("MelConfig: window " +
                                std::to_string(windowLength) +
                                " exceeds fft size " + std::to_string(fftSize));
  }
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sampleRate / 2.0)) {
    throw std::invalid_argument("MelConfig: need 0 <= fmin < fmax <= sr/2");
  }
  if (!(logFloor > 0.0)) {
    throw std::invalid_argument("MelConfig: logFloor must be positive");
  }
}

double hzToMel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double melToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(const MelConfig& cfg)
    : numBins_(cfg.fftSize / 2 + 1) {
  cfg.validate();
  const int m = cfg.nMels;
  std::vector<double> edges(m + 2);
  const double lo = hzToMel(cfg.fmin);
  const double hi = hzToMel(cfg.fmax);
  for (int i = 0; i < m + 2; ++i) {
    edges[i] = melToHz(lo + (hi - lo) * i / (m + 1));
  }
  // Pin the outer edges so round-off cannot leak weight past fmin/fmax.
  edges.front() = cfg.fmin;
  edges.back() = cfg.fmax;
  weights_ = Tensor({static_cast<std::size_t>(m),
                     static_cast<std::size_t>(numBins_)});
  centers_.resize(m);
  const double binHz = static_cast<double>(cfg.sampleRate) / cfg.fftSize;
  for (int f = 0; f < m; ++f) {
    const double left = edges[f];
    const double center = edges[f + 1];
    const double right = edges[f + 2];
    centers_[f] = center;
    for (int b = 0; b < numBins_; ++b) {
      const double hz = b * binHz;
      double w = 0.0;
      if (hz > left && hz <= center) {
        w = (hz - left) / (center - left);
      } else if (hz > center && hz < right) {
        w = (right - hz) / (right - center);
      }
      weights_.at(f, b) = w;
    }
  }
}

Tensor logMelSpectrogram(const Waveform& w, const MelConfig& cfg) {
  cfg.validate();
  if (w.sampleRate != cfg.sampleRate) {
    throw std::invalid_argument("logMelSpectrogram: sample rate " +
                                std::to_string(w.sampleRate) + " != " +
                                std::to_string(cfg.sampleRate));
  }
  const std::size_t len = w.samples.size();
  const std::size_t win = cfg.windowLength;
  if (len < win) {
    throw std::invalid_argument("logMelSpectrogram: waveform of " +
                                std::to_string(len) +
                                " samples is shorter than one window");
  }
  const std::size_t frames = 1 + (len - win) / cfg.hopLength;
  // Plans and filterbanks are reused across calls on the same thread.
  struct Cached {
    MelConfig cfg;
    MelFilterbank bank;
    RealFft fft;
    std::vector<double> window;
    std::vector<std::pair<int, int>> support;  // nonzero [lo, hi) per filter
  };
  thread_local std::unique_ptr<Cached> cache;
  const auto same = [](const MelConfig& a, const MelConfig& b) {
    return a.sampleRate == b.sampleRate && a.nMels == b.nMels &&
           a.fftSize == b.fftSize && a.windowLength == b.windowLength &&
           a.hopLength == b.hopLength && a.fmin == b.fmin && a.fmax == b.fmax;
  };
  if (!cache || !same(cache->cfg, cfg)) {
    std::vector<double> window(win);
    for (std::size_t i = 0; i < win; ++i) {
      window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
    }
    cache.reset(new Cached{cfg, MelFilterbank(cfg), RealFft(cfg.fftSize),
                           std::move(window), {}});
    const int nb = cache->bank.numBins();
    for (int f = 0; f < cfg.nMels; ++f) {
      const double* row = &cache->bank.weights().data[static_cast<std::size_t>(f) * nb];
      int lo = 0, hi = nb;
      while (lo < nb && row[lo] == 0.0) ++lo;
      while (hi > lo && row[hi - 1] == 0.0) --hi;
      cache->support.emplace_back(lo, hi);
    }
  }
  const MelFilterbank& bank = cache->bank;
  const int bins = bank.numBins();
  const std::vector<double>& window = cache->window;
  RealFft& fft = cache->fft;
  std::vector<double> mag(bins);
  Tensor out({frames, static_cast<std::size_t>(cfg.nMels)});
  for (std::size_t t = 0; t < frames; ++t) {
    double* in = fft.input();
    const std::size_t start = t * cfg.hopLength;
    for (int i = 0; i < cfg.fftSize; ++i) {
      in[i] = static_cast<std::size_t>(i) < win
                  ? w.samples[start + i] * window[i]
                  : 0.0;
    }
    fft.execute();
    const fftw_complex* spec = fft.output();
    for (int b = 0; b < bins; ++b) {
      mag[b] = std::sqrt(spec[b][0] * spec[b][0] + spec[b][1] * spec[b][1]);
    }
    for (int f = 0; f < cfg.nMels; ++f) {
      const double* wrow = &bank.weights().data[static_cast<std::size_t>(f) * bins];
      double e = 0.0;
      const auto [lo, hi] = cache->support[f];
      for (int b = lo; b < hi; ++b) {
        e += wrow[b] * mag[b];
      }
      out.at(t, f) = std::log(e + cfg.logFloor);
    }
  }
  return out;
}

void writeFeatures(const std::string& path, const Tensor& features,
                   const std::string& utteranceId) {
  if (features.shape.size() != 2) {
    throw std::invalid_argument("writeFeatures: expected a T x F matrix, got " +
                                shapeString(features.shape));
  }
  std::string bytes;
  bytes.reserve(features.data.size() * 4);
  for (double v : features.data) {
    appendF32LE(bytes, static_cast<float>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("writeFeatures: cannot open " + path);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  nlohmann::json side = {{"shape", features.shape},
                         {"utterance_id", utteranceId}};
  std::ofstream js(path + ".json", std::ios::trunc);
  js << side.dump() << "\n";
}

Tensor readFeatures(const std::string& path, std::string* utteranceId) {
  std::ifstream js(path + ".json");
  if (!js) {
    throw std::runtime_error("readFeatures: missing sidecar " + path + ".json");
  }
  const auto side = nlohmann::json::parse(js);
  const auto shape = side.at("shape").get<Shape>();
  if (shape.size() != 2) {
    throw std::runtime_error("readFeatures: sidecar shape must be [T, F]");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("readFeatures: cannot open " + path);
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const std::size_t n = shapeNumel(shape);
  if (bytes.size() != 4 * n) {
    throw std::runtime_error("readFeatures: " + path + " holds " +
                             std::to_string(bytes.size()) + " bytes, expected " +
                             std::to_string(4 * n));
  }
  Tensor t(shape);
  for (std::size_t i = 0; i < n; ++i) {
    t.data[i] = readF32LE(bytes, 4 * i);
  }
  if (utteranceId) {
    *utteranceId = side.value("utterance_id", "");
  }
  return t;
}

} // namespace hetcond
