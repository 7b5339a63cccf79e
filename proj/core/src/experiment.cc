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

#include "hetcond/experiment.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "hetcond/checkpoint.h"
#include "hetcond/metrics.h"
#include "hetcond/noise.h"
#include "hetcond/ops.h"
#include "hetcond/router.h"

namespace hetcond {

namespace {

const std::vector<std::pair<Method, std::string>>& methodNames() {
  static const std::vector<std::pair<Method, std::string>> names = {
      {Method::kNone, "none"},
      {Method::kSingle, "single"},
      {Method::kMulti, "multi"},
      {Method::kMultiDlc, "multi-DLC"},
      {Method::kDann, "DANN"},
      {Method::kMaddog, "MADDoG"},
      {Method::kDsnDlc, "DSN-DLC"},
      {Method::kFusionSingle, "fusion-single"},
      {Method::kFusionMultiDlc, "fusion-multi-DLC"},
      {Method::kFusionDsnDlc, "fusion-dsn-DLC"},
  };
  return names;
}

} // namespace

Method parseMethod(const std::string& name) {
  if (name == "fusion-multi") {
    throw std::invalid_argument(
        "method fusion-multi is not supported: static per-condition datasets "
        "break dialogue order; use fusion-multi-DLC");
  }
  for (const auto& [m, n] : methodNames()) {
    if (n == name) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string methodName(Method m) {
  for (const auto& [mm, n] : methodNames()) {
    if (mm == m) return n;
  }
  throw std::logic_error("methodName: unknown method");
}

bool isFusion(Method m) {
  return m == Method::kFusionSingle || m == Method::kFusionMultiDlc ||
         m == Method::kFusionDsnDlc;
}

bool usesRouting(Method m) {
  return m == Method::kMulti || m == Method::kMultiDlc ||
         m == Method::kFusionMultiDlc;
}

RoutingSource parseRouting(const std::string& name) {
  if (name == "truth") return RoutingSource::kTruth;
  if (name == "predictor") return RoutingSource::kPredictor;
  throw std::invalid_argument("unknown routing source '" + name +
                              "' (expected truth or predictor)");
}

std::string routingName(RoutingSource r) {
  return r == RoutingSource::kTruth ? "truth" : "predictor";
}

void to_json(nlohmann::json& j, const MelConfig& c) {
  j = nlohmann::json{{"sample_rate", c.sampleRate},   {"n_mels", c.nMels},
                     {"fft_size", c.fftSize},         {"window_length", c.windowLength},
                     {"hop_length", c.hopLength},     {"fmin", c.fmin},
                     {"fmax", c.fmax},                {"log_floor", c.logFloor}};
}

void from_json(const nlohmann::json& j, MelConfig& c) {
  c.sampleRate = j.value("sample_rate", c.sampleRate);
  c.nMels = j.value("n_mels", c.nMels);
  c.fftSize = j.value("fft_size", c.fftSize);
  c.windowLength = j.value("window_length", c.windowLength);
  c.hopLength = j.value("hop_length", c.hopLength);
  c.fmin = j.value("fmin", c.fmin);
  c.fmax = j.value("fmax", c.fmax);
  c.logFloor = j.value("log_floor", c.logFloor);
  c.validate();
}

ExperimentConfig ExperimentConfig::deskScale() {
  ExperimentConfig c;
  c.model.encoder.channels = 4;
  c.model.encoder.kernel = 5;
  c.model.head.hidden = {16, 16};
  c.train.epochs = 6;
  c.train.batchSize = 16;
  c.train.lr = 1.0;
  c.predictorEncoder.channels = 4;
  c.predictorEncoder.kernel = 3;
  c.predictorHead.hidden = {8};
  c.predictorTrain.epochs = 3;
  c.predictorTrain.batchSize = 16;
  c.predictorTrain.lr = 1.0;
  c.fusion.hidden = 16;
  c.fusion.head.hidden = {16};
  c.fusionTrain.epochs = 30;
  c.fusionTrain.batchSize = 8;
  c.fusionTrain.lr = 1.0;
  return c;
}

void ExperimentConfig::validate() const {
  const Method m = parseMethod(method);
  NoiseProfile::byName(profile);
  if (trials < 1) {
    throw std::invalid_argument("trials must be >= 1");
  }
  if (experiment == 1) {
    if (m == Method::kDann || m == Method::kMaddog || m == Method::kDsnDlc ||
        m == Method::kFusionDsnDlc) {
      throw std::invalid_argument("method " + method +
                                  " is not part of experiment 1");
    }
  } else if (experiment == 2) {
    if (m == Method::kFusionMultiDlc) {
      throw std::invalid_argument("method " + method +
                                  " is not part of experiment 2");
    }
  } else {
    throw std::invalid_argument("experiment must be 1 or 2");
  }
  mel.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"method", c.method},
                     {"profile", c.profile},
                     {"experiment", c.experiment},
                     {"trials", c.trials},
                     {"data_dir", c.dataDir},
                     {"seed", c.seed},
                     {"routing", routingName(c.routing)},
                     {"standardize", c.standardize},
                     {"parallel_trials", c.parallelTrials},
                     {"none_trains_on_clean", c.noneTrainsOnClean},
                     {"synth", c.synth},
                     {"mel", c.mel},
                     {"model", c.model},
                     {"train", c.train},
                     {"predictor_encoder", c.predictorEncoder},
                     {"predictor_head", c.predictorHead},
                     {"predictor_train", c.predictorTrain},
                     {"dann", c.dann},
                     {"maddog", c.maddog},
                     {"dsn", c.dsn},
                     {"fusion", c.fusion},
                     {"fusion_train", c.fusionTrain}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.method = j.value("method", c.method);
  c.profile = j.value("profile", c.profile);
  c.experiment = j.value("experiment", c.experiment);
  c.trials = j.value("trials", c.trials);
  c.dataDir = j.value("data_dir", c.dataDir);
  c.seed = j.value("seed", c.seed);
  if (j.contains("routing")) c.routing = parseRouting(j.at("routing").get<std::string>());
  c.standardize = j.value("standardize", c.standardize);
  c.parallelTrials = j.value("parallel_trials", c.parallelTrials);
  c.noneTrainsOnClean = j.value("none_trains_on_clean", c.noneTrainsOnClean);
  const auto sub = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  sub("synth", c.synth);
  sub("mel", c.mel);
  sub("model", c.model);
  sub("train", c.train);
  sub("predictor_encoder", c.predictorEncoder);
  sub("predictor_head", c.predictorHead);
  sub("predictor_train", c.predictorTrain);
  sub("dann", c.dann);
  sub("maddog", c.maddog);
  sub("dsn", c.dsn);
  sub("fusion", c.fusion);
  sub("fusion_train", c.fusionTrain);
  c.validate();
}

void ExperimentReport::summarize() {
  std::vector<double> u, t, p;
  for (const auto& r : trials) {
    u.push_back(r.uar);
    t.push_back(r.uarTruthRouting);
    p.push_back(r.predictorAccuracy);
  }
  mean = hetcond::mean(u);
  stddev = u.size() > 1 ? hetcond::stddev(u) : 0.0;
  meanTruthRouting = hetcond::mean(t);
  meanPredictorAccuracy = hetcond::mean(p);
}

std::string ExperimentReport::table() const { return reportTable({*this}); }

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    nlohmann::json tj{{"seed", t.seed},
                      {"uar", t.uar},
                      {"uar_truth_routing", t.uarTruthRouting},
                      {"predictor_accuracy", t.predictorAccuracy}};
    if (!t.perUnseen.empty()) {
      nlohmann::json per = nlohmann::json::array();
      for (const auto& l : t.perUnseen) {
        per.push_back({{"unseen", categoryName(categoryFromIndex(l.unseen))},
                       {"uar_unseen", l.uarUnseen},
                       {"uar_seen", l.uarSeen},
                       {"uar_all", l.uarAll},
                       {"train_size", l.trainSize}});
      }
      tj["per_unseen"] = per;
    }
    trials.push_back(tj);
  }
  j = nlohmann::json{{"experiment", r.experiment},
                     {"method", r.method},
                     {"profile", r.profile},
                     {"routing", r.routing},
                     {"mean_uar", r.mean},
                     {"std_uar", r.stddev},
                     {"mean_uar_truth_routing", r.meanTruthRouting},
                     {"mean_predictor_accuracy", r.meanPredictorAccuracy},
                     {"trials", trials}};
}

std::string reportTable(const std::vector<ExperimentReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "method" << std::setw(9) << "profile"
     << std::right << std::setw(10) << "UAR (%)" << std::setw(9) << "std"
     << std::setw(13) << "truth-route" << std::setw(8) << "trials" << '\n';
  os << std::string(67, '-') << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& r : reports) {
    os << std::left << std::setw(18) << r.method << std::setw(9) << r.profile
       << std::right << std::setw(10) << 100.0 * r.mean << std::setw(9)
       << 100.0 * r.stddev << std::setw(13) << 100.0 * r.meanTruthRouting
       << std::setw(8) << r.trials.size() << '\n';
  }
  return os.str();
}

FeatureStats featureStats(std::span<const Tensor* const> features) {
  if (features.empty()) {
    throw std::invalid_argument("featureStats: no features");
  }
  const std::size_t d = features.front()->cols();
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  std::size_t rows = 0;
  for (const Tensor* f : features) {
    if (f->cols() != d) {
      throw std::invalid_argument("featureStats: inconsistent feature width");
    }
    for (std::size_t t = 0; t < f->rows(); ++t) {
      for (std::size_t k = 0; k < d; ++k) {
        const double v = f->at(t, k);
        sum[k] += v;
        sq[k] += v * v;
      }
    }
    rows += f->rows();
  }
  FeatureStats s{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t k = 0; k < d; ++k) {
    s.mean[k] = sum[k] / rows;
    const double var = std::max(sq[k] / rows - s.mean[k] * s.mean[k], 0.0);
    s.stddev[k] = std::max(std::sqrt(var), 1e-8);
  }
  return s;
}

void standardize(Tensor& features, const FeatureStats& stats) {
  if (features.cols() != stats.mean.size()) {
    throw std::invalid_argument("standardize: feature width mismatch");
  }
  for (std::size_t t = 0; t < features.rows(); ++t) {
    for (std::size_t k = 0; k < features.cols(); ++k) {
      features.at(t, k) = (features.at(t, k) - stats.mean[k]) / stats.stddev[k];
    }
  }
}

PreparedData prepareTrial(const Corpus& corpus,
                          const std::vector<Tensor>& cleanFeatures,
                          const NoiseBank& bank, const NoiseProfile& profile,
                          std::uint64_t seed, const ExperimentConfig& cfg) {
  if (cleanFeatures.size() != corpus.utterances.size()) {
    throw std::invalid_argument("prepareTrial: clean features not parallel to corpus");
  }
  std::vector<Utterance> noisy = corpus.utterances;
  applyProfile(noisy, profile, bank, deriveSeed(seed, "noise"));

  PreparedData data;
  std::vector<Tensor*> noisyFeats, cleanFeats;
  std::vector<const Tensor*> trainNoisy, trainClean;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    Tensor* f = &data.storage.emplace_back(logMelSpectrogram(noisy[i].audio, cfg.mel));
    Tensor* c = &data.storage.emplace_back(cleanFeatures[i]);
    noisyFeats.push_back(f);
    cleanFeats.push_back(c);
    if (noisy[i].split == "train") {
      trainNoisy.push_back(f);
      trainClean.push_back(c);
    }
  }
  if (cfg.standardize && !trainNoisy.empty()) {
    const FeatureStats ns = featureStats(trainNoisy);
    const FeatureStats cs = featureStats(trainClean);
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      standardize(*noisyFeats[i], ns);
      standardize(*cleanFeats[i], cs);
    }
  }
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const Utterance& u = noisy[i];
    Example e;
    e.features = noisyFeats[i];
    e.clean = cleanFeats[i];
    e.target = u.labelBins;
    e.label = u.emotionClass();
    e.condition = u.condition->index();
    auto& examples = u.split == "train" ? data.train
                     : u.split == "val" ? data.val : data.test;
    auto& ids = u.split == "train" ? data.trainIds
                : u.split == "val" ? data.valIds : data.testIds;
    auto& dialogues = u.split == "train" ? data.trainDialogues
                      : u.split == "val" ? data.valDialogues : data.testDialogues;
    examples.push_back(e);
    ids.push_back(u.id);
    dialogues.push_back(u.dialogueId);
  }
  return data;
}

namespace {

std::vector<const Example*> pointers(std::span<const Example> data) {
  std::vector<const Example*> out;
  out.reserve(data.size());
  for (const auto& e : data) out.push_back(&e);
  return out;
}

// Predictions in chunks so evaluation graphs stay small.
template <typename Fn>
std::vector<int> predictChunked(std::span<const Example> data, Fn&& predict) {
  std::vector<int> out;
  const std::size_t chunk = 64;
  for (std::size_t s = 0; s < data.size(); s += chunk) {
    const auto part = pointers(data.subspan(s, std::min(chunk, data.size() - s)));
    const auto p = argmaxRows(predict(std::span<const Example* const>(part), s));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::uint64_t trialSeed(const ExperimentConfig& cfg, int t) {
  return deriveSeed(cfg.seed, "trial", static_cast<std::uint64_t>(t));
}

TrainConfig withSeed(TrainConfig c, std::uint64_t seed, std::string_view name) {
  c.seed = deriveSeed(seed, name);
  return c;
}


using EncodeFn = std::function<Var(const Example&, int route)>;

struct DialogueGroups {
  std::vector<std::string> ids;
  std::vector<std::vector<std::size_t>> members;  // indices into the split
};

DialogueGroups groupDialogues(std::span<const std::string> dialogueOf) {
  DialogueGroups g;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < dialogueOf.size(); ++i) {
    auto [it, inserted] = slot.emplace(dialogueOf[i], g.ids.size());
    if (inserted) {
      g.ids.push_back(dialogueOf[i]);
      g.members.emplace_back();
    }
    g.members[it->second].push_back(i);
  }
  return g;
}

DialogueSample makeDialogueSample(const std::string& id,
                                  std::span<const std::size_t> members,
                                  std::span<const Example> examples,
                                  std::span<const std::string> utteranceIds,
                                  std::span<const int> routing,
                                  const EncodeFn& encode,
                                  const LexicalConfig& lexical) {
  DialogueSample s;
  s.dialogue.id = id;
  s.lexical = Tensor({members.size(), static_cast<std::size_t>(lexical.dim)});
  s.targets = Tensor({members.size(), static_cast<std::size_t>(kNumEmotionBins)});
  for (std::size_t k = 0; k < members.size(); ++k) {
    const std::size_t i = members[k];
    const Example& e = examples[i];
    s.dialogue.utteranceIds.push_back(utteranceIds[i]);
    s.dialogue.positions.push_back(static_cast<int>(k));
    s.acoustic.push_back(Var::constant(encode(e, routing[i]).value()));
    const auto lex = pseudoLexicalEmbedding(utteranceIds[i], e.label, lexical);
    std::copy(lex.begin(), lex.end(), s.lexical.data.begin() + k * lexical.dim);
    for (int c = 0; c < kNumEmotionBins; ++c) s.targets.at(k, c) = e.target[c];
  }
  return s;
}

// Freezes the acoustic model and trains the context model on its pooled
// encodings of the training dialogues, then predicts each test dialogue.
MethodPredictions runFusion(const ExperimentConfig& cfg,
                            const PreparedData& data,
                            std::span<const Example> train,
                            std::span<const int> routing,
                            std::span<const int> truthRouting,
                            const AcousticModel& acoustic, std::uint64_t seed) {
  const EncodeFn encode = [&acoustic](const Example& e, int route) {
    return acoustic.encode(e, route);
  };
  // Training utterances keep dialogue order; held-out ones are dropped and
  // the remaining positions renumbered.
  std::unordered_map<const Tensor*, std::size_t> trainIndex;
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    trainIndex.emplace(data.train[i].features, i);
  }
  std::vector<std::string> ids, dialogues;
  std::vector<int> trainRoute;
  for (const auto& e : train) {
    const auto it = trainIndex.find(e.features);
    if (it == trainIndex.end()) {
      throw std::invalid_argument("runFusion: training example not in the train split");
    }
    ids.push_back(data.trainIds[it->second]);
    dialogues.push_back(data.trainDialogues[it->second]);
    trainRoute.push_back(e.condition);
  }
  const auto groups = groupDialogues(dialogues);
  std::vector<DialogueSample> samples;
  for (std::size_t d = 0; d < groups.ids.size(); ++d) {
    samples.push_back(makeDialogueSample(groups.ids[d], groups.members[d], train,
                                         ids, trainRoute, encode, cfg.fusion.lexical));
  }
  FusionNetwork net(acoustic.encodingDim(), cfg.fusion, kNumEmotionBins,
                    deriveSeed(seed, "fusion"));
  trainFusion(samples, net, withSeed(cfg.fusionTrain, seed, "fusion_order"));

  const auto testGroups = groupDialogues(data.testDialogues);
  const auto predictWith = [&](std::span<const int> route) {
    std::vector<int> out(data.test.size(), 0);
    for (std::size_t d = 0; d < testGroups.ids.size(); ++d) {
      const auto s = makeDialogueSample(testGroups.ids[d], testGroups.members[d],
                                        data.test, data.testIds, route, encode,
                                        cfg.fusion.lexical);
      const auto p = argmaxRows(fuseContext(net, s.dialogue, s.acoustic, s.lexical));
      for (std::size_t k = 0; k < p.size(); ++k) out[testGroups.members[d][k]] = p[k];
    }
    return out;
  };
  MethodPredictions out;
  out.routed = predictWith(routing);
  out.truthRouted = predictWith(truthRouting);
  return out;
}

Method acousticBase(Method m) {
  switch (m) {
    case Method::kFusionSingle:
      return Method::kSingle;
    case Method::kFusionMultiDlc:
      return Method::kMultiDlc;
    case Method::kFusionDsnDlc:
      return Method::kDsnDlc;
    default:
      return m;
  }
}

// none / single.
class BaselineModel : public AcousticModel {
 public:
  BaselineModel(const BaselineConfig& cfg, std::uint64_t seed) : net_(cfg, seed) {}
  void fit(std::span<const Example> train, const TrainConfig& cfg) override {
    trainLoop(train, net_.params(), cfg, [this](Batch b) { return net_.loss(b); });
  }
  Tensor predict(Batch batch, std::span<const int>) const override {
    return net_.predict(batch);
  }
  Var encode(const Example& e, int) const override {
    return meanPoolTime(net_.encoder().encode(*e.features));
  }
  int encodingDim() const override { return net_.config().encoder.channels; }
  ParamSet params() const override { return net_.params(); }

 private:
  BaselineNetwork net_;
};

// Independent networks on static per-condition sub-datasets.
class MultiModel : public AcousticModel {
 public:
  MultiModel(const BaselineConfig& cfg, const std::vector<int>& seen,
             std::uint64_t seed)
      : channels_(cfg.encoder.channels) {
    for (int c : seen) {
      nets_.emplace(c, std::make_unique<BaselineNetwork>(
                           cfg, deriveSeed(seed, "expert", static_cast<std::uint64_t>(c))));
    }
  }
  void fit(std::span<const Example> train, const TrainConfig& cfg) override {
    for (auto& [c, net] : nets_) {
      std::vector<Example> subset;
      for (const auto& e : train) {
        if (e.condition == c) subset.push_back(e);
      }
      if (subset.empty()) {
        throw std::invalid_argument("multi: no training data for condition " +
                                    std::to_string(c));
      }
      TrainConfig own = cfg;
      own.seed = deriveSeed(cfg.seed, "expert", static_cast<std::uint64_t>(c));
      trainLoop(subset, net->params(), own,
                [&n = *net](Batch b) { return n.loss(b); });
    }
  }
  Tensor predict(Batch batch, std::span<const int> routing) const override {
    Tensor out({batch.size(), static_cast<std::size_t>(kNumEmotionBins)});
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Tensor p = net(routing[i]).predict(batch.subspan(i, 1));
      for (std::size_t c = 0; c < p.cols(); ++c) out.at(i, c) = p.at(0, c);
    }
    return out;
  }
  Var encode(const Example& e, int route) const override {
    return meanPoolTime(net(route).encoder().encode(*e.features));
  }
  int encodingDim() const override { return channels_; }
  ParamSet params() const override {
    ParamSet p;
    for (const auto& [c, net] : nets_) {
      p.append(net->params(), "net" + std::to_string(c) + "/");
    }
    return p;
  }

 private:
  const BaselineNetwork& net(int condition) const {
    const auto it = nets_.find(condition);
    if (it == nets_.end()) {
      throw std::invalid_argument("multi: no network for routed condition " +
                                  std::to_string(condition));
    }
    return *it->second;
  }

  int channels_;
  std::map<int, std::unique_ptr<BaselineNetwork>> nets_;
};

class DlcModel : public AcousticModel {
 public:
  DlcModel(const BaselineConfig& cfg, std::vector<int> seen, std::uint64_t seed)
      : net_(cfg, std::move(seen), seed) {}
  void fit(std::span<const Example> train, const TrainConfig& cfg) override {
    trainLoop(train, net_.params(), cfg, [this](Batch b) { return net_.loss(b); });
  }
  Tensor predict(Batch batch, std::span<const int> routing) const override {
    return net_.predict(batch, routing);
  }
  Var encode(const Example& e, int route) const override {
    return meanPoolTime(net_.experts().encoder(route).encode(*e.features));
  }
  int encodingDim() const override { return net_.config().encoder.channels; }
  ParamSet params() const override { return net_.params(); }

 private:
  DlcNetwork net_;
};

class DannModel : public AcousticModel {
 public:
  DannModel(const BaselineConfig& cfg, std::vector<int> seen, const DannConfig& dann,
            std::uint64_t seed)
      : net_(cfg, std::move(seen), seed), dann_(dann) {}
  void fit(std::span<const Example> train, const TrainConfig& cfg) override {
    trainDann(train, net_, cfg, dann_);
  }
  Tensor predict(Batch batch, std::span<const int>) const override {
    return net_.predict(batch);
  }
  Var encode(const Example& e, int) const override {
    return meanPoolTime(net_.base().encoder().encode(*e.features));
  }
  int encodingDim() const override { return net_.base().config().encoder.channels; }
  ParamSet params() const override { return net_.params(); }

 private:
  DannNetwork net_;
  DannConfig dann_;
};

class MaddogModel : public AcousticModel {
 public:
  MaddogModel(const BaselineConfig& cfg, std::vector<int> seen,
              const MaddogConfig& maddog, std::uint64_t seed)
      : net_(cfg, std::move(seen), seed), maddog_(maddog) {}
  void fit(std::span<const Example> train, const TrainConfig& cfg) override {
    MaddogState state = makeMaddogState(cfg);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      maddogEpoch(train, net_, cfg, maddog_, epoch, state);
    }
  }
  Tensor predict(Batch batch, std::span<const int>) const override {
    return net_.predict(batch);
  }
  Var encode(const Example& e, int) const override {
    return meanPoolTime(net_.base().encoder().encode(*e.features));
  }
  int encodingDim() const override { return net_.base().config().encoder.channels; }
  ParamSet params() const override {
    ParamSet p = net_.mainParams();
    p.append(net_.criticParams());
    return p;
  }

 private:
  MaddogNetwork net_;
  MaddogConfig maddog_;
};

// Classification, and the encoding handed to the context model, use the
// shared encoder only.
class DsnModel : public AcousticModel {
 public:
  DsnModel(const BaselineConfig& cfg, std::vector<int> seen, const DsnConfig& dsn,
           std::uint64_t seed)
      : net_(cfg, std::move(seen), dsn, seed), channels_(cfg.encoder.channels) {}
  void fit(std::span<const Example> train, const TrainConfig& cfg) override {
    trainDsn(train, net_, cfg);
  }
  Tensor predict(Batch batch, std::span<const int>) const override {
    return net_.predict(batch);
  }
  Var encode(const Example& e, int) const override {
    return meanPoolTime(net_.sharedEncoder().encode(*e.features));
  }
  int encodingDim() const override { return channels_; }
  ParamSet params() const override { return net_.params(); }

 private:
  DsnNetwork net_;
  int channels_;
};

} // namespace

std::unique_ptr<AcousticModel> makeAcousticModel(Method method,
                                                 const ExperimentConfig& cfg,
                                                 std::vector<int> seen,
                                                 std::uint64_t seed) {
  BaselineConfig base = cfg.model;
  switch (acousticBase(method)) {
    case Method::kNone:
      base.useDecoder = false;
      return std::make_unique<BaselineModel>(base, seed);
    case Method::kSingle:
      return std::make_unique<BaselineModel>(base, seed);
    case Method::kMulti:
      return std::make_unique<MultiModel>(base, seen, seed);
    case Method::kMultiDlc:
      return std::make_unique<DlcModel>(base, std::move(seen), seed);
    case Method::kDann:
      return std::make_unique<DannModel>(base, std::move(seen), cfg.dann, seed);
    case Method::kMaddog:
      return std::make_unique<MaddogModel>(base, std::move(seen), cfg.maddog, seed);
    case Method::kDsnDlc:
      return std::make_unique<DsnModel>(base, std::move(seen), cfg.dsn, seed);
    default:
      break;
  }
  throw std::logic_error("makeAcousticModel: unhandled method");
}

namespace {

void fitModel(Method method, const ExperimentConfig& cfg, AcousticModel& model,
              std::span<const Example> train, std::uint64_t seed) {
  const TrainConfig tc = withSeed(cfg.train, seed, "order");
  if (method == Method::kNone && cfg.noneTrainsOnClean) {
    std::vector<Example> clean(train.begin(), train.end());
    for (auto& e : clean) e.features = e.clean;
    model.fit(clean, tc);
  } else {
    model.fit(train, tc);
  }
}

} // namespace

MethodPredictions runMethod(Method method, const ExperimentConfig& cfg,
                            const PreparedData& data,
                            std::span<const Example> train,
                            std::span<const int> seen,
                            std::span<const int> routing,
                            std::span<const int> truthRouting,
                            std::uint64_t seed) {
  const auto& test = data.test;
  if (routing.size() != test.size() || truthRouting.size() != test.size()) {
    throw std::invalid_argument("runMethod: routing labels must cover the test split");
  }
  auto model = makeAcousticModel(method, cfg, std::vector<int>(seen.begin(), seen.end()),
                                 deriveSeed(seed, "model"));
  fitModel(method, cfg, *model, train, seed);
  if (isFusion(method)) {
    return runFusion(cfg, data, train, routing, truthRouting, *model, seed);
  }
  const auto predictWith = [&](std::span<const int> route) {
    return predictChunked(test, [&](Batch b, std::size_t offset) {
      return model->predict(b, route.subspan(offset, b.size()));
    });
  };
  MethodPredictions out;
  out.routed = predictWith(routing);
  out.truthRouted = usesRouting(method) ? predictWith(truthRouting) : out.routed;
  return out;
}

namespace {

struct Routing {
  std::vector<int> predicted;  // one seen condition per test sample
  double accuracy = 0.0;       // on test samples whose condition is seen
};

// Trains the condition predictor on `train` (conditions in `seen`) and
// routes every test sample to one of them.
Routing predictRouting(const ExperimentConfig& cfg, std::span<const Example> train,
                       std::span<const Example> test, std::span<const int> seen,
                       std::uint64_t seed) {
  const DomainIndex index(std::vector<int>(seen.begin(), seen.end()));
  std::vector<Example> relabeled(train.begin(), train.end());
  for (auto& e : relabeled) e.condition = index.index(e.condition);
  TrainConfig tc = withSeed(cfg.predictorTrain, seed, "predictor_order");
  tc.seed = deriveSeed(seed, "predictor");
  const NoisePredictor predictor = trainNoisePredictor(
      relabeled, cfg.predictorEncoder, cfg.predictorHead, index.size(), tc);
  Routing r;
  const auto dense = predictChunked(test, [&predictor](Batch b, std::size_t) {
    return predictor.predictProba(b);
  });
  std::vector<int> truth, guess;
  for (std::size_t i = 0; i < test.size(); ++i) {
    r.predicted.push_back(seen[dense[i]]);
    if (std::find(seen.begin(), seen.end(), test[i].condition) != seen.end()) {
      truth.push_back(test[i].condition);
      guess.push_back(r.predicted.back());
    }
  }
  r.accuracy = truth.empty() ? 0.0 : accuracy(truth, guess);
  return r;
}

std::vector<int> labelsOf(std::span<const Example> data) {
  std::vector<int> out;
  for (const auto& e : data) out.push_back(e.label);
  return out;
}

struct SharedInputs {
  Corpus corpus;
  NoiseBank bank;
  std::vector<Tensor> clean;
};

SharedInputs makeInputs(const ExperimentConfig& cfg) {
  SharedInputs in;
  if (cfg.dataDir.empty()) {
    in.corpus = synthCorpus(cfg.synth);
    in.bank = synthNoiseBank(cfg.synth);
  } else {
    in.corpus = loadCorpus(cfg.dataDir);
    in.bank = loadNoiseBank(cfg.dataDir + "/noise");
  }
  for (const auto& u : in.corpus.utterances) {
    in.clean.push_back(logMelSpectrogram(u.cleanAudio, cfg.mel));
  }
  return in;
}

TrialResult experiment1Trial(const ExperimentConfig& cfg, const SharedInputs& in,
                             std::uint64_t seed) {
  const Method method = parseMethod(cfg.method);
  const PreparedData data = prepareTrial(in.corpus, in.clean, in.bank,
                                         NoiseProfile::byName(cfg.profile), seed, cfg);
  const std::vector<int> seen = {0, 1, 2};
  std::vector<int> truth;
  for (const auto& e : data.test) truth.push_back(e.condition);
  TrialResult r;
  r.seed = seed;
  std::vector<int> routing = truth;
  if (usesRouting(method)) {
    const Routing pr = predictRouting(cfg, data.train, data.test, seen, seed);
    r.predictorAccuracy = pr.accuracy;
    if (cfg.routing == RoutingSource::kPredictor) routing = pr.predicted;
  }
  const auto pred = runMethod(method, cfg, data, data.train, seen, routing, truth, seed);
  const auto labels = labelsOf(data.test);
  r.uar = uar(labels, pred.routed, kNumEmotionBins);
  r.uarTruthRouting = uar(labels, pred.truthRouted, kNumEmotionBins);
  return r;
}

TrialResult experiment2Trial(const ExperimentConfig& cfg, const SharedInputs& in,
                             std::uint64_t seed) {
  const Method method = parseMethod(cfg.method);
  const PreparedData data = prepareTrial(in.corpus, in.clean, in.bank,
                                         NoiseProfile::byName(cfg.profile), seed, cfg);
  const std::vector<int> conditions = {0, 1, 2};
  const auto labels = labelsOf(data.test);
  TrialResult r;
  r.seed = seed;
  std::vector<double> truthUars, accuracies;
  for (int unseen : conditions) {
    const std::uint64_t runSeed = deriveSeed(seed, "unseen", unseen);
    std::vector<int> truthRouted;
    const MethodRunner runner = [&](std::span<const Example> train,
                                    std::span<const Example> test,
                                    std::span<const int> seen, int held) {
      // Unseen samples have no expert of their own: both routing modes send
      // them wherever the predictor does.
      std::vector<int> truth, routing;
      Routing pr;
      if (usesRouting(method)) {
        pr = predictRouting(cfg, train, test, seen, runSeed);
        accuracies.push_back(pr.accuracy);
      }
      for (std::size_t i = 0; i < test.size(); ++i) {
        const int c = test[i].condition;
        const int fallback = pr.predicted.empty() ? seen.front() : pr.predicted[i];
        truth.push_back(c == held ? fallback : c);
        routing.push_back(cfg.routing == RoutingSource::kPredictor ? fallback
                                                                   : truth.back());
      }
      TrainConfig guarded = cfg.train;
      guarded.forbiddenCondition = held;
      ExperimentConfig local = cfg;
      local.train = guarded;
      auto pred = runMethod(method, local, data, train, seen, routing, truth, runSeed);
      truthRouted = std::move(pred.truthRouted);
      return pred.routed;
    };
    LeaveOneOutResult lr =
        leaveOneOutRun(data.train, data.test, conditions, unseen, runner);
    std::vector<int> t, p;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      if (data.test[i].condition == unseen) {
        t.push_back(labels[i]);
        p.push_back(truthRouted[i]);
      }
    }
    truthUars.push_back(uar(t, p, kNumEmotionBins));
    r.perUnseen.push_back(std::move(lr));
  }
  std::vector<double> unseenUars;
  for (const auto& l : r.perUnseen) unseenUars.push_back(l.uarUnseen);
  r.uar = mean(unseenUars);
  r.uarTruthRouting = mean(truthUars);
  r.predictorAccuracy = accuracies.empty() ? 0.0 : mean(accuracies);
  return r;
}

ExperimentReport runTrials(const ExperimentConfig& cfg, int experiment) {
  ExperimentConfig c = cfg;
  c.experiment = experiment;
  c.validate();
  const SharedInputs in = makeInputs(c);
  ExperimentReport report;
  report.experiment = experiment;
  report.method = c.method;
  report.profile = c.profile;
  report.routing = routingName(c.routing);
  const auto trial = [&](int t) {
    const std::uint64_t seed = trialSeed(c, t);
    return experiment == 1 ? experiment1Trial(c, in, seed)
                           : experiment2Trial(c, in, seed);
  };
  if (c.parallelTrials) {
    std::vector<std::future<TrialResult>> futures;
    for (int t = 0; t < c.trials; ++t) {
      futures.push_back(std::async(std::launch::async, trial, t));
    }
    for (auto& f : futures) report.trials.push_back(f.get());
  } else {
    for (int t = 0; t < c.trials; ++t) report.trials.push_back(trial(t));
  }
  report.summarize();
  return report;
}

} // namespace

ExperimentReport runExperiment1(const ExperimentConfig& cfg) { return runTrials(cfg, 1); }
ExperimentReport runExperiment2(const ExperimentConfig& cfg) { return runTrials(cfg, 2); }

ExperimentReport runExperiment(const ExperimentConfig& cfg) {
  return runTrials(cfg, cfg.experiment);
}

namespace {

TrialResult scoreCheckpointModel(const AcousticModel& model,
                                 const NoisePredictor* predictor,
                                 const PreparedData& data,
                                 const ExperimentConfig& c, std::uint64_t seed) {
  TrialResult r;
  r.seed = seed;
  std::vector<int> truth;
  for (const auto& e : data.test) truth.push_back(e.condition);
  std::vector<int> routing = truth;
  if (predictor != nullptr) {
    routing = predictChunked(data.test, [&](Batch b, std::size_t) {
      return predictor->predictProba(b);
    });
    r.predictorAccuracy = accuracy(truth, routing);
    if (c.routing == RoutingSource::kTruth) routing = truth;
  }
  const auto predictWith = [&](std::span<const int> route) {
    return predictChunked(data.test, [&](Batch b, std::size_t offset) {
      return model.predict(b, route.subspan(offset, b.size()));
    });
  };
  const auto labels = labelsOf(data.test);
  r.uar = uar(labels, predictWith(routing), kNumEmotionBins);
  r.uarTruthRouting = uar(labels, predictWith(truth), kNumEmotionBins);
  return r;
}

} // namespace

TrialResult trainCheckpoint(const ExperimentConfig& cfg, const std::string& path) {
  ExperimentConfig c = cfg;
  c.experiment = 1;
  c.validate();
  const Method method = parseMethod(c.method);
  if (isFusion(method)) {
    throw std::invalid_argument("checkpoints hold unimodal models; " + c.method +
                                " is a fusion method");
  }
  const SharedInputs in = makeInputs(c);
  const std::uint64_t seed = trialSeed(c, 0);
  const PreparedData data = prepareTrial(in.corpus, in.clean, in.bank,
                                         NoiseProfile::byName(c.profile), seed, c);
  const std::vector<int> seen = {0, 1, 2};
  auto model = makeAcousticModel(method, c, seen, deriveSeed(seed, "model"));
  fitModel(method, c, *model, data.train, seed);
  ParamSet all;
  all.append(model->params(), "model/");
  std::optional<NoisePredictor> predictor;
  if (usesRouting(method)) {
    TrainConfig tc = c.predictorTrain;
    tc.seed = deriveSeed(seed, "predictor");
    predictor.emplace(trainNoisePredictor(data.train, c.predictorEncoder,
                                          c.predictorHead, kNumNoiseCategories, tc));
    all.append(predictor->params(), "predictor/");
  }
  saveCheckpoint(path, all,
                 nlohmann::json{{"config", c}, {"trial_seed", seed}, {"format", 1}});
  return scoreCheckpointModel(*model, predictor ? &*predictor : nullptr, data, c, seed);
}

TrialResult evaluateCheckpoint(const std::string& path) {
  const Checkpoint ckpt = loadCheckpoint(path);
  if (!ckpt.header.contains("config") || !ckpt.header.contains("trial_seed")) {
    throw std::invalid_argument(path + ": not an experiment checkpoint");
  }
  const ExperimentConfig c = ckpt.header.at("config").get<ExperimentConfig>();
  const auto seed = ckpt.header.at("trial_seed").get<std::uint64_t>();
  const Method method = parseMethod(c.method);
  const SharedInputs in = makeInputs(c);
  const PreparedData data = prepareTrial(in.corpus, in.clean, in.bank,
                                         NoiseProfile::byName(c.profile), seed, c);
  const std::vector<int> seen = {0, 1, 2};
  // Fresh initialization from an unrelated seed; every value is overwritten.
  auto model = makeAcousticModel(method, c, seen, 0);
  ParamSet all;
  all.append(model->params(), "model/");
  std::optional<NoisePredictor> predictor;
  if (usesRouting(method)) {
    predictor.emplace(c.predictorEncoder, c.predictorHead, kNumNoiseCategories, 0);
    all.append(predictor->params(), "predictor/");
  }
  restoreParams(ckpt, all);
  return scoreCheckpointModel(*model, predictor ? &*predictor : nullptr, data, c, seed);
}

std::vector<double> noisePredictorAccuracy(const ExperimentConfig& cfg) {
  const SharedInputs in = makeInputs(cfg);
  std::vector<double> out;
  const std::vector<int> seen = {0, 1, 2};
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = trialSeed(cfg, t);
    const PreparedData data = prepareTrial(in.corpus, in.clean, in.bank,
                                           NoiseProfile::byName(cfg.profile), seed, cfg);
    out.push_back(predictRouting(cfg, data.train, data.test, seen, seed).accuracy);
  }
  return out;
}

} // namespace hetcond
