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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "hetcond/audio.h"
#include "hetcond/mel.h"
#include "hetcond/noise.h"

namespace hetcond {
namespace {

Waveform sine(double hz, double amp, std::size_t n, int sr = 16000) {
  Waveform w;
  w.sampleRate = sr;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / sr);
  }
  return w;
}

Waveform randomWave(std::size_t n, std::uint64_t seed, double amp = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) {
    s = u(rng);
  }
  return w;
}

double measuredSnr(const Waveform& signal, const MixResult& r) {
  double ps = 0.0;
  double pn = 0.0;
  for (std::size_t i = 0; i < signal.samples.size(); ++i) {
    const double n = r.noisy.samples[i] - signal.samples[i];
    ps += signal.samples[i] * signal.samples[i];
    pn += n * n;
  }
  return 10.0 * std::log10(ps / pn);
}

TEST(RmsTest, Examples) {
  Waveform zeros;
  zeros.samples.assign(100, 0.0);
  EXPECT_DOUBLE_EQ(rms(zeros), 0.0);
  Waveform half;
  half.samples.assign(100, 0.5);
  EXPECT_DOUBLE_EQ(rms(half), 0.5);
  // 100 Hz at 16 kHz: 160 samples per period, 10 whole periods.
  EXPECT_NEAR(rms(sine(100.0, 1.0, 1600)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_THROW(rms(Waveform{}), std::invalid_argument);
}

TEST(MixTest, ScaleFollowsSnrFormula) {
  // Equal-RMS signal and noise; short enough that nothing clips.
  const Waveform s = sine(100.0, 0.01, 1600);
  const Waveform n = sine(230.0, 0.01, 1600);
  ASSERT_NEAR(rms(s), rms(n), 1e-6);
  const double ratio = rms(s) / rms(n);
  for (double snr : {0.0, -20.0, 20.0}) {
    SCOPED_TRACE(snr);
    auto r = mixAtSnr(s, n, snr, 7);
    // Same-length noise starts at a seeded offset, so alignment is a rotation
    // and the rms of the aligned clip is that of whole periods.
    const double expected = ratio * std::pow(10.0, -snr / 20.0);
    EXPECT_NEAR(r.scale, expected, 1e-3 * expected);
    EXPECT_NEAR(measuredSnr(s, r), snr, 0.05);
    EXPECT_NEAR(r.measuredSnrDb, snr, 0.05);
    EXPECT_EQ(r.noisy.clippedSamples, 0u);
  }
  EXPECT_NEAR(mixAtSnr(s, n, 0.0, 1).scale, 1.0, 1e-3);
  EXPECT_NEAR(mixAtSnr(s, n, -20.0, 1).scale, 10.0, 1e-2);
  EXPECT_NEAR(mixAtSnr(s, n, 20.0, 1).scale, 0.1, 1e-4);
}

TEST(MixTest, ArbitraryInputsHitTargetSnr) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> snrDist(-30.0, 30.0);
  std::uniform_int_distribution<std::size_t> lenDist(50, 5000);
  for (int trial = 0; trial < 200; ++trial) {
    const Waveform s = randomWave(lenDist(rng), rng(), 0.02);
    const Waveform n = randomWave(lenDist(rng), rng(), 0.5);
    const double snr = snrDist(rng);
    auto r = mixAtSnr(s, n, snr, rng());
    ASSERT_EQ(r.noisy.samples.size(), s.samples.size());
    EXPECT_NEAR(r.measuredSnrDb, snr, 0.05);
    if (r.noisy.clippedSamples == 0) {
      EXPECT_NEAR(measuredSnr(s, r), snr, 0.05);
    }
    for (double x : r.noisy.samples) {
      ASSERT_LE(std::abs(x), 1.0);
    }
  }
}

TEST(MixTest, ClipsAndCounts) {
  Waveform s;
  s.samples.assign(400, 0.5);
  const Waveform n = sine(100.0, 0.5, 400);
  auto r = mixAtSnr(s, n, -20.0, 0);
  EXPECT_GT(r.noisy.clippedSamples, 0u);
  for (double x : r.noisy.samples) {
    EXPECT_LE(std::abs(x), 1.0);
  }
  EXPECT_NEAR(r.measuredSnrDb, -20.0, 0.05);
}

TEST(MixTest, DeterministicUnderSeed) {
  const Waveform s = randomWave(1000, 1);
  const Waveform n = randomWave(3000, 2);
  EXPECT_EQ(mixAtSnr(s, n, -5, 9).noisy.samples,
            mixAtSnr(s, n, -5, 9).noisy.samples);
}

TEST(MixTest, Rejections) {
  const Waveform s = randomWave(100, 1);
  Waveform silent;
  silent.samples.assign(100, 0.0);
  EXPECT_THROW(mixAtSnr(s, silent, 0, 0), std::invalid_argument);
  EXPECT_THROW(mixAtSnr(silent, s, 0, 0), std::invalid_argument);
  EXPECT_THROW(mixAtSnr(s, Waveform{}, 0, 0), std::invalid_argument);
  Waveform other = s;
  other.sampleRate = 8000;
  EXPECT_THROW(mixAtSnr(s, other, 0, 0), std::invalid_argument);
}

TEST(MelTest, SilenceIsLogFloor) {
  MelConfig cfg;
  Waveform w;
  w.samples.assign(16000, 0.0);
  const Tensor f = logMelSpectrogram(w, cfg);
  ASSERT_EQ(f.shape, (Shape{98, 40}));
  for (double v : f.data) {
    EXPECT_DOUBLE_EQ(v, std::log(cfg.logFloor));
  }
}

TEST(MelTest, FrameCount) {
  MelConfig cfg;
  for (std::size_t len : {400u, 401u, 559u, 560u, 4000u}) {
    Waveform w = randomWave(len, len);
    EXPECT_EQ(logMelSpectrogram(w, cfg).rows(), 1 + (len - 400) / 160);
  }
  EXPECT_THROW(logMelSpectrogram(randomWave(399, 0), cfg),
               std::invalid_argument);
  Waveform w8 = randomWave(1000, 0);
  w8.sampleRate = 8000;
  EXPECT_THROW(logMelSpectrogram(w8, cfg), std::invalid_argument);
}

TEST(MelTest, PureToneLandsInNearestBand) {
  MelConfig cfg;
  // Oracle: band centers straight from the mel-scale definition.
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto inv = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double top = mel(8000.0);
  int nearest = 0;
  double best = 1e300;
  for (int m = 0; m < 40; ++m) {
    const double c = inv(top * (m + 1) / 41.0);
    if (std::abs(c - 440.0) < best) {
      best = std::abs(c - 440.0);
      nearest = m;
    }
  }
  const Tensor f = logMelSpectrogram(sine(440.0, 0.5, 16000), cfg);
  for (std::size_t t = 0; t < f.rows(); ++t) {
    int arg = 0;
    for (int m = 1; m < 40; ++m) {
      if (f.at(t, m) > f.at(t, arg)) arg = m;
    }
    ASSERT_EQ(arg, nearest) << "frame " << t;
  }
}

TEST(MelTest, FilterbankShape) {
  MelConfig cfg;
  MelFilterbank bank(cfg);
  const Tensor& w = bank.weights();
  ASSERT_EQ(w.shape, (Shape{40, 257}));
  const double binHz = 16000.0 / 512;
  for (int m = 0; m < 40; ++m) {
    if (m > 0) {
      EXPECT_GT(bank.centerHz()[m], bank.centerHz()[m - 1]);
    }
    // Single maximum: nondecreasing then nonincreasing, with one peak value.
    int peak = 0;
    for (int b = 1; b < 257; ++b) {
      if (w.at(m, b) > w.at(m, peak)) peak = b;
    }
    EXPECT_GT(w.at(m, peak), 0.0);
    for (int b = 1; b <= peak; ++b) EXPECT_GE(w.at(m, b), w.at(m, b - 1));
    for (int b = peak + 1; b < 257; ++b) EXPECT_LE(w.at(m, b), w.at(m, b - 1));
    // Zero outside the triangle support.
    const double left = m == 0 ? 0.0 : bank.centerHz()[m - 1];
    const double right = m == 39 ? 8000.0 : bank.centerHz()[m + 1];
    for (int b = 0; b < 257; ++b) {
      const double hz = b * binHz;
      if (hz <= left || hz >= right) {
        EXPECT_EQ(w.at(m, b), 0.0) << "band " << m << " bin " << b;
      }
    }
  }
}

TEST(MelTest, NoNonFiniteValues) {
  MelConfig cfg;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    Waveform w = randomWave(2000, rng(), i == 0 ? 1.0 : 1e-9);
    for (double v : logMelSpectrogram(w, cfg).data) {
      ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(MelTest, FeatureFileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "hetcond_dsp_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "u1.f32").string();
  Tensor t({3, 40});
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = 0.25 * i;
  writeFeatures(path, t, "u1");
  std::string id;
  const Tensor back = readFeatures(path, &id);
  EXPECT_EQ(id, "u1");
  EXPECT_EQ(back.shape, t.shape);
  EXPECT_EQ(back.data, t.data);
  EXPECT_EQ(std::filesystem::file_size(path), 3u * 40 * 4);
}

TEST(WavTest, RoundTripAndRejections) {
  const auto dir = std::filesystem::temp_directory_path() / "hetcond_dsp_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "a.wav").string();
  Waveform w = sine(300, 0.5, 800);
  writeWav(path, w);
  const Waveform back = readWav(path);
  ASSERT_EQ(back.samples.size(), w.samples.size());
  EXPECT_EQ(back.sampleRate, 16000);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], w.samples[i], 1.0 / 16384);
  }
  // Patch channel count to 2.
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::string stereo = bytes;
  stereo[22] = 2;
  const std::string bad = (dir / "stereo.wav").string();
  std::ofstream(bad, std::ios::binary) << stereo;
  EXPECT_THROW(readWav(bad), std::runtime_error);
  std::string eight = bytes;
  eight[34] = 8;
  std::ofstream(bad, std::ios::binary | std::ios::trunc) << eight;
  EXPECT_THROW(readWav(bad), std::runtime_error);
  std::ofstream(bad, std::ios::binary | std::ios::trunc) << "not a wav";
  EXPECT_THROW(readWav(bad), std::runtime_error);
}

NoiseBank makeBank() {
  NoiseBank bank;
  std::uint64_t seed = 100;
  for (auto c : kAllNoiseCategories) {
    for (int k = 0; k < 2; ++k) {
      bank[c].push_back(randomWave(1200, seed++, 0.2));
    }
  }
  return bank;
}

std::vector<Utterance> makeCorpus(std::size_t n) {
  std::vector<Utterance> corpus(n);
  for (std::size_t i = 0; i < n; ++i) {
    corpus[i].id = "u" + std::to_string(i);
    corpus[i].cleanAudio = randomWave(800, 1000 + i, 0.05);
    corpus[i].audio = corpus[i].cleanAudio;
    corpus[i].cleanFeatures = Tensor({2, 2}, {1.0, 2.0, 3.0, double(i)});
  }
  return corpus;
}

TEST(ApplyProfileTest, DeterministicAndLabelled) {
  const NoiseBank bank = makeBank();
  const NoiseProfile profile = NoiseProfile::h3();
  auto a = makeCorpus(50);
  auto b = makeCorpus(50);
  applyProfile(a, profile, bank, 42);
  applyProfile(b, profile, bank, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].audio.samples, b[i].audio.samples);
    ASSERT_TRUE(a[i].condition.has_value());
    EXPECT_EQ(a[i].condition, b[i].condition);
    EXPECT_DOUBLE_EQ(a[i].condition->snrDb, profile.snr(a[i].condition->category));
    EXPECT_EQ(a[i].cleanFeatures.data, (std::vector<double>{1, 2, 3, double(i)}));
    EXPECT_EQ(a[i].cleanAudio.samples, makeCorpus(i + 1)[i].cleanAudio.samples);
  }
  auto c = makeCorpus(50);
  applyProfile(c, profile, bank, 43);
  bool differs = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    differs |= c[i].audio.samples != a[i].audio.samples;
  }
  EXPECT_TRUE(differs);
}

TEST(ApplyProfileTest, CategoryFrequenciesWithinThreeSigma) {
  NoiseBank bank;
  for (auto c : kAllNoiseCategories) {
    bank[c].push_back(randomWave(64, 7 + categoryIndex(c), 0.2));
  }
  std::vector<Utterance> corpus(10000);
  for (auto& u : corpus) {
    u.cleanAudio = randomWave(64, 1, 0.05);
  }
  const auto stats = applyProfile(corpus, NoiseProfile::h1(), bank, 2024);
  const double n = 10000.0;
  const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
  for (auto count : stats.categoryCounts) {
    EXPECT_LE(std::abs(count - n / 3), 3 * sigma);
  }
}

TEST(ApplyProfileTest, EmptyCategoryRejected) {
  NoiseBank bank = makeBank();
  bank[NoiseCategory::kHuman].clear();
  auto corpus = makeCorpus(3);
  EXPECT_THROW(applyProfile(corpus, NoiseProfile::h1(), bank, 0),
               std::invalid_argument);
}

TEST(NoiseProfileTest, Constants) {
  const auto h1 = NoiseProfile::byName("h1");
  EXPECT_EQ(h1.snr(NoiseCategory::kNatural), -5);
  EXPECT_EQ(h1.snr(NoiseCategory::kInterior), -20);
  EXPECT_EQ(h1.snr(NoiseCategory::kHuman), -20);
  const auto h2 = NoiseProfile::byName("h2");
  EXPECT_EQ(h2.snr(NoiseCategory::kNatural), -20);
  EXPECT_EQ(h2.snr(NoiseCategory::kInterior), -1);
  EXPECT_EQ(h2.snr(NoiseCategory::kHuman), -5);
  const auto h3 = NoiseProfile::byName("h3");
  EXPECT_EQ(h3.snr(NoiseCategory::kNatural), -5);
  EXPECT_EQ(h3.snr(NoiseCategory::kInterior), -30);
  EXPECT_EQ(h3.snr(NoiseCategory::kHuman), -10);
  EXPECT_THROW(NoiseProfile::byName("h4"), std::invalid_argument);
  EXPECT_THROW(parseCategory("traffic"), std::invalid_argument);
  EXPECT_EQ(parseCategory("interior"), NoiseCategory::kInterior);
}

TEST(NoiseBankTest, LoadsDirectoryLayout) {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "hetcond_bank_test";
  fs::remove_all(root);
  for (auto c : kAllNoiseCategories) {
    fs::create_directories(root / categoryName(c));
    writeWav((root / categoryName(c) / "a.wav").string(), sine(200, 0.3, 400));
  }
  const auto bank = loadNoiseBank(root.string());
  for (auto c : kAllNoiseCategories) {
    EXPECT_EQ(bank.at(c).size(), 1u);
  }
  fs::remove_all(root / "human");
  EXPECT_THROW(loadNoiseBank(root.string()), std::runtime_error);
}

} // namespace
} // namespace hetcond
