// data/dataset.cc

// Copyright 2026  HFC-VP authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hfcvp/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "hfcvp/error.h"
#include "hfcvp/rng.h"
#include "hfcvp/serialize.h"

namespace hfcvp {

namespace fs = std::filesystem;

std::vector<SpeakerLabel> DatasetManifest::Labels() const {
  std::vector<SpeakerLabel> out;
  out.reserve(records.size());
  for (const auto &r : records) out.push_back(SpeakerLabel{r.label});
  return out;
}

void to_json(nlohmann::json &j, const DatasetManifest &m) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto &r : m.records)
    recs.push_back({{"id", r.id}, {"features", r.features}, {"speaker_id", r.speaker_id},
                    {"label", r.label}, {"frame_count", r.frame_count}});
  j = nlohmann::json{
      {"num_classes", m.num_classes},
      {"class_counts", m.class_counts},
      {"features", m.features},
      {"embedding_key", m.embedding_key == EmbeddingKey::kSpeaker ? "speaker" : "utterance"},
      {"provenance", m.provenance},
      {"records", recs},
  };
}

void from_json(const nlohmann::json &j, DatasetManifest &m) {
  try {
    m.num_classes = j.at("num_classes");
    m.class_counts = j.at("class_counts").get<std::vector<int64_t>>();
    if (j.contains("features")) m.features = j.at("features").get<FeatureConfig>();
    const std::string key = j.value("embedding_key", "utterance");
    if (key != "speaker" && key != "utterance")
      Fail(ErrorKind::kFormat, "embedding_key must be 'speaker' or 'utterance'");
    m.embedding_key = key == "speaker" ? EmbeddingKey::kSpeaker : EmbeddingKey::kUtterance;
    m.provenance = j.value("provenance", nlohmann::json::object());
    m.records.clear();
    for (const auto &r : j.at("records")) {
      UtteranceRecord rec;
      rec.id = r.at("id");
      rec.features = r.value("features", "features/" + rec.id + ".bin");
      rec.speaker_id = r.value("speaker_id", "");
      rec.label = r.at("label");
      rec.frame_count = r.value("frame_count", int64_t{0});
      m.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kFormat, std::string("manifest: ") + e.what());
  }
}

ValidationReport Validate(const DatasetManifest &m) {
  ValidationReport r;
  auto &v = r.violations;
  if (m.num_classes < 1) v.push_back("num_classes must be >= 1");
  if (static_cast<int64_t>(m.class_counts.size()) != m.num_classes)
    v.push_back("class_counts has " + std::to_string(m.class_counts.size()) +
                " entries, expected num_classes = " + std::to_string(m.num_classes));
  std::vector<int64_t> counts(static_cast<std::size_t>(std::max<int64_t>(m.num_classes, 0)), 0);
  std::map<std::string, int> ids;
  for (const auto &rec : m.records) {
    if (rec.label < 0 || rec.label >= m.num_classes) {
      v.push_back("record " + rec.id + ": label " + std::to_string(rec.label) +
                  " outside [0, " + std::to_string(m.num_classes) + ")");
      continue;
    }
    ++counts[static_cast<std::size_t>(rec.label)];
    if (++ids[rec.id] == 2) v.push_back("duplicate utterance id " + rec.id);
  }
  if (v.empty() && counts != m.class_counts)
    v.push_back("class_counts inconsistent with records");
  if (m.features.mel_bins != kMelBins) v.push_back("mel_bins must be 80");
  return r;
}

DatasetManifest LoadManifest(const fs::path &root) {
  auto m = ReadJsonFile(root / "manifest.json").get<DatasetManifest>();
  ThrowIfInvalid(Validate(m), (root / "manifest.json").string());
  return m;
}

void SaveManifest(const fs::path &root, const DatasetManifest &m) {
  WriteJsonFile(root / "manifest.json", nlohmann::json(m));
}

// ---------------------------------------------------------------------------

ClassPrior EstimatePrior(std::span<const SpeakerLabel> labels, int64_t num_classes,
                         PriorMode mode) {
  if (labels.empty()) Fail(ErrorKind::kEmptyData, "cannot estimate a prior from no labels");
  if (num_classes < 1) Fail(ErrorKind::kConfig, "num_classes must be >= 1");
  ClassPrior prior;
  prior.counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (const auto &l : labels) {
    if (l.class_index < 0 || l.class_index >= num_classes)
      Fail(ErrorKind::kRange, "label " + std::to_string(l.class_index) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    ++prior.counts[static_cast<std::size_t>(l.class_index)];
  }
  prior.probs.resize(prior.counts.size());
  if (mode == PriorMode::kNormalized) {
    const double total = static_cast<double>(labels.size());
    for (std::size_t c = 0; c < prior.counts.size(); ++c)
      prior.probs[c] = static_cast<double>(prior.counts[c]) / total;
  } else {
    const double top = static_cast<double>(
        *std::max_element(prior.counts.begin(), prior.counts.end()));
    double z = 0.0;
    for (std::size_t c = 0; c < prior.counts.size(); ++c) {
      prior.probs[c] = std::exp(static_cast<double>(prior.counts[c]) - top);
      z += prior.probs[c];
    }
    for (double &p : prior.probs) p /= z;
  }
  return prior;
}

// ---------------------------------------------------------------------------

ValidationReport Validate(const ToyCorpusConfig &c) {
  ValidationReport r;
  auto &v = r.violations;
  if (c.num_classes < 2) v.push_back("num_classes must be >= 2");
  if (c.utterances_per_class < 1) v.push_back("utterances_per_class must be >= 1");
  if (c.min_frames < 1 || c.max_frames < c.min_frames)
    v.push_back("frame range must satisfy 1 <= min_frames <= max_frames");
  if (c.content_units < 1) v.push_back("content_units must be >= 1");
  if (c.min_unit_frames < 1 || c.max_unit_frames < c.min_unit_frames)
    v.push_back("unit frame range must satisfy 1 <= min <= max");
  if (!(c.content_noise >= 0.0)) v.push_back("content_noise must be >= 0");
  if (!(c.feature_scale > 0.0)) v.push_back("feature_scale must be > 0");
  if (!c.speakers.empty() && static_cast<int64_t>(c.speakers.size()) != c.num_classes)
    v.push_back("explicit speakers must have num_classes entries");
  return r;
}

std::vector<ToySpeaker> ToySpeakers(const ToyCorpusConfig &cfg) {
  if (!cfg.speakers.empty()) return cfg.speakers;
  Rng rng(MixSeed(cfg.seed, 0x5eed5eedULL));
  std::vector<ToySpeaker> out(static_cast<std::size_t>(cfg.num_classes));
  for (auto &s : out) {
    s.tilt = rng.Uniform(-2.0, 2.0);
    s.bump_center = rng.Uniform(8.0, 72.0);
    s.bump_height = rng.Uniform(1.0, 2.0);
    s.energy = rng.Uniform(-1.0, 1.0);
  }
  return out;
}

namespace {

std::string SpeakerName(int64_t c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03lld", static_cast<long long>(c));
  return buf;
}

std::string UtteranceName(int64_t c, int64_t u) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "spk%03lld_u%04lld", static_cast<long long>(c),
                static_cast<long long>(u));
  return buf;
}

// Smooth random spectral shapes shared by every speaker ("phones").
std::vector<std::vector<double>> ContentInventory(const ToyCorpusConfig &cfg) {
  Rng rng(MixSeed(cfg.seed, 0xc0ffeeULL));
  constexpr int kSmooth = 11;
  std::vector<std::vector<double>> units(static_cast<std::size_t>(cfg.content_units));
  for (auto &u : units) {
    std::vector<double> raw(kMelBins + kSmooth - 1);
    for (double &x : raw) x = rng.Normal();
    u.assign(kMelBins, 0.0);
    for (int64_t f = 0; f < kMelBins; ++f) {
      double s = 0.0;
      for (int k = 0; k < kSmooth; ++k) s += raw[static_cast<std::size_t>(f + k)];
      u[static_cast<std::size_t>(f)] = s / std::sqrt(static_cast<double>(kSmooth));
    }
  }
  return units;
}

}  // namespace

DatasetManifest GenerateToyCorpus(const ToyCorpusConfig &cfg, const fs::path &root) {
  ThrowIfInvalidConfig(Validate(cfg), "toy corpus config");
  fs::create_directories(root / "features");
  fs::create_directories(root / "embeddings");

  const auto speakers = ToySpeakers(cfg);
  const auto inventory = ContentInventory(cfg);

  DatasetManifest m;
  m.num_classes = cfg.num_classes;
  m.class_counts.assign(static_cast<std::size_t>(cfg.num_classes), cfg.utterances_per_class);
  m.embedding_key = EmbeddingKey::kSpeaker;
  nlohmann::json spk = nlohmann::json::array();
  for (const auto &s : speakers)
    spk.push_back({{"tilt", s.tilt}, {"bump_center", s.bump_center},
                   {"bump_width", s.bump_width}, {"bump_height", s.bump_height},
                   {"energy", s.energy}});
  m.provenance = {{"generator", "toy"},
                  {"seed", cfg.seed},
                  {"embedding_seed", cfg.embedding_seed},
                  {"utterances_per_class", cfg.utterances_per_class},
                  {"frame_range", {cfg.min_frames, cfg.max_frames}},
                  {"content_units", cfg.content_units},
                  {"content_noise", cfg.content_noise},
                  {"feature_scale", cfg.feature_scale},
                  {"speakers", spk}};

  for (int64_t c = 0; c < cfg.num_classes; ++c) {
    const ToySpeaker &s = speakers[static_cast<std::size_t>(c)];
    std::vector<double> profile(kMelBins);
    for (int64_t f = 0; f < kMelBins; ++f) {
      const double x = static_cast<double>(f) / static_cast<double>(kMelBins - 1) - 0.5;
      const double d = (static_cast<double>(f) - s.bump_center) / s.bump_width;
      profile[static_cast<std::size_t>(f)] =
          s.energy + s.tilt * x + s.bump_height * std::exp(-0.5 * d * d);
    }
    SaveEmbedding(root / "embeddings" / (SpeakerName(c) + ".bin"),
                  ToyEmbedding(cfg.embedding_seed, SpeakerName(c)));

    for (int64_t u = 0; u < cfg.utterances_per_class; ++u) {
      Rng rng(MixSeed(MixSeed(cfg.seed, static_cast<uint64_t>(c)), static_cast<uint64_t>(u)));
      const int64_t frames = rng.UniformInt(cfg.min_frames, cfg.max_frames);
      FrameMatrix x(frames, kMelBins);
      int64_t t = 0;
      while (t < frames) {
        const int64_t len = rng.UniformInt(cfg.min_unit_frames, cfg.max_unit_frames);
        const auto &unit = inventory[static_cast<std::size_t>(
            rng.UniformInt(0, cfg.content_units - 1))];
        for (int64_t k = 0; k < len && t < frames; ++k, ++t)
          for (int64_t f = 0; f < kMelBins; ++f) {
            const double v = unit[static_cast<std::size_t>(f)] +
                             profile[static_cast<std::size_t>(f)] +
                             cfg.content_noise * rng.Normal();
            x(t, f) = static_cast<float>(cfg.feature_scale * v);
          }
      }
      UtteranceRecord rec;
      rec.id = UtteranceName(c, u);
      rec.features = "features/" + rec.id + ".bin";
      rec.speaker_id = SpeakerName(c);
      rec.label = c;
      rec.frame_count = frames;
      SaveMatrix(root / rec.features, x);
      m.records.push_back(std::move(rec));
    }
  }
  SaveManifest(root, m);
  return m;
}

SpeakerEmbedding ToyEmbedding(uint64_t seed, const std::string &key) {
  Rng rng(HashString(seed, key));
  std::vector<double> v(kEmbeddingDim);
  double norm = 0.0;
  for (double &x : v) {
    x = rng.Normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  SpeakerEmbedding e;
  e.values.resize(kEmbeddingDim);
  for (std::size_t i = 0; i < v.size(); ++i) e.values[i] = static_cast<float>(v[i] / norm);
  return e;
}

// ---------------------------------------------------------------------------

EmbeddingProvider EmbeddingProvider::FromFiles(const fs::path &root,
                                               const DatasetManifest &manifest,
                                               bool average_per_speaker) {
  EmbeddingProvider p;
  p.mode_ = Mode::kFiles;
  p.key_ = manifest.embedding_key;
  for (const auto &rec : manifest.records) {
    const std::string key =
        p.key_ == EmbeddingKey::kSpeaker ? rec.speaker_id : rec.id;
    if (p.table_.count(key)) continue;
    auto e = LoadEmbedding(root / "embeddings" / (key + ".bin"));
    ThrowIfInvalid(Validate(e), "embedding " + key);
    p.table_.emplace(key, std::move(e));
  }
  if (average_per_speaker && p.key_ == EmbeddingKey::kUtterance) {
    std::map<std::string, std::pair<std::vector<double>, int>> sums;
    for (const auto &rec : manifest.records) {
      auto &[sum, n] = sums[rec.speaker_id];
      sum.resize(kEmbeddingDim, 0.0);
      const auto &e = p.table_.at(rec.id);
      for (int64_t i = 0; i < kEmbeddingDim; ++i) sum[static_cast<std::size_t>(i)] += e.values[static_cast<std::size_t>(i)];
      ++n;
    }
    std::map<std::string, SpeakerEmbedding> averaged;
    for (auto &[spk, sn] : sums) {
      SpeakerEmbedding e;
      for (double s : sn.first) e.values.push_back(static_cast<float>(s / sn.second));
      averaged.emplace(spk, std::move(e));
    }
    p.table_ = std::move(averaged);
    p.key_ = EmbeddingKey::kSpeaker;
  }
  return p;
}

EmbeddingProvider EmbeddingProvider::Toy(uint64_t seed) {
  EmbeddingProvider p;
  p.mode_ = Mode::kToy;
  p.seed_ = seed;
  return p;
}

SpeakerEmbedding EmbeddingProvider::Get(const UtteranceRecord &record) const {
  if (mode_ == Mode::kToy) return ToyEmbedding(seed_, record.speaker_id);
  const std::string &key = key_ == EmbeddingKey::kSpeaker ? record.speaker_id : record.id;
  auto it = table_.find(key);
  if (it == table_.end()) Fail(ErrorKind::kData, "no embedding for '" + key + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

Dataset Dataset::Load(const fs::path &root, bool average_embeddings_per_speaker) {
  Dataset d;
  d.root_ = root;
  d.manifest_ = LoadManifest(root);
  auto provider = EmbeddingProvider::FromFiles(root, d.manifest_, average_embeddings_per_speaker);
  d.features_.reserve(d.manifest_.records.size());
  for (auto &rec : d.manifest_.records) {
    MelSpectrogram mel{LoadMatrix(root / rec.features), d.manifest_.features.sample_rate_hz};
    ThrowIfInvalid(Validate(mel), rec.features);
    if (rec.frame_count != 0 && rec.frame_count != mel.frame_count())
      Fail(ErrorKind::kData, rec.id + ": manifest frame_count disagrees with features");
    rec.frame_count = mel.frame_count();
    d.features_.push_back(std::move(mel));
    d.embeddings_.push_back(provider.Get(rec));
  }
  return d;
}

Dataset Dataset::FromMemory(DatasetManifest manifest, std::vector<MelSpectrogram> features,
                            std::vector<SpeakerEmbedding> embeddings) {
  if (features.size() != manifest.records.size() || embeddings.size() != features.size())
    Fail(ErrorKind::kDimension, "records, features and embeddings must align");
  ThrowIfInvalid(Validate(manifest), "manifest");
  Dataset d;
  d.manifest_ = std::move(manifest);
  d.features_ = std::move(features);
  d.embeddings_ = std::move(embeddings);
  return d;
}

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset d;
  d.root_ = root_;
  d.manifest_ = manifest_;
  d.manifest_.records.clear();
  d.manifest_.class_counts.assign(d.manifest_.class_counts.size(), 0);
  for (std::size_t i : indices) {
    d.manifest_.records.push_back(manifest_.records.at(i));
    ++d.manifest_.class_counts[static_cast<std::size_t>(manifest_.records[i].label)];
    d.features_.push_back(features_[i]);
    d.embeddings_.push_back(embeddings_[i]);
  }
  return d;
}

std::pair<torch::Tensor, torch::Tensor> PadFrames(std::span<const FrameMatrix *const> frames) {
  if (frames.empty()) Fail(ErrorKind::kEmptyData, "cannot pad an empty batch");
  int64_t longest = 0;
  const int64_t width = frames[0]->cols();
  for (const auto *m : frames) {
    if (m->cols() != width) Fail(ErrorKind::kDimension, "batch rows differ in width");
    longest = std::max(longest, m->rows());
  }
  const auto b = static_cast<int64_t>(frames.size());
  auto x = torch::zeros({b, longest, width}, torch::kFloat32);
  auto mask = torch::zeros({b, longest}, torch::kFloat32);
  for (int64_t i = 0; i < b; ++i) {
    const FrameMatrix &m = *frames[static_cast<std::size_t>(i)];
    std::memcpy(x[i].data_ptr<float>(), m.data().data(), m.data().size() * sizeof(float));
    mask[i].narrow(0, 0, m.rows()).fill_(1.0f);
  }
  return {x, mask};
}

Batch MakeBatch(const Dataset &dataset, std::span<const std::size_t> indices) {
  std::vector<const FrameMatrix *> frames;
  frames.reserve(indices.size());
  for (std::size_t i : indices) frames.push_back(&dataset.features(i).frames);
  Batch batch;
  std::tie(batch.features, batch.mask) = PadFrames(frames);
  const auto b = static_cast<int64_t>(indices.size());
  batch.labels = torch::empty({b}, torch::kInt64);
  batch.embeddings = torch::empty({b, kEmbeddingDim}, torch::kFloat32);
  for (int64_t k = 0; k < b; ++k) {
    const std::size_t i = indices[static_cast<std::size_t>(k)];
    batch.labels[k] = dataset.record(i).label;
    const auto &e = dataset.embedding(i).values;
    std::memcpy(batch.embeddings[k].data_ptr<float>(), e.data(), e.size() * sizeof(float));
  }
  batch.indices.assign(indices.begin(), indices.end());
  return batch;
}

std::vector<std::vector<std::size_t>> EpochBatches(std::size_t n, int64_t batch_size,
                                                   uint64_t seed, int64_t epoch) {
  if (batch_size < 1) Fail(ErrorKind::kConfig, "batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(MixSeed(seed, static_cast<uint64_t>(epoch) ^ 0xba7c4ULL));
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.UniformInt(0, static_cast<int64_t>(i) - 1))]);
  std::vector<std::vector<std::size_t>> out;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < n; start += bs)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + bs)));
  return out;
}

BatchStream::BatchStream(const Dataset &dataset, int64_t batch_size, uint64_t seed,
                         int64_t epoch)
    : dataset_(dataset), plan_(EpochBatches(dataset.size(), batch_size, seed, epoch)) {}

bool BatchStream::Next(Batch *batch) {
  if (cursor_ >= plan_.size()) return false;
  *batch = MakeBatch(dataset_, plan_[cursor_++]);
  return true;
}

}  // namespace hfcvp
