// hfcvp/dataset.h

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

#ifndef HFCVP_DATASET_H_
#define HFCVP_DATASET_H_

// Dataset directory layout:
//
//   <root>/manifest.json
//   <root>/features/<utt_id>.bin        one rank-2 HFCVP1 record, T x 80
//   <root>/embeddings/<key>.bin         one rank-1 HFCVP1 record, 192
//
// where <key> is the utterance id or the speaker id depending on the
// manifest's "embedding_key".

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "hfcvp/audio.h"
#include "hfcvp/types.h"
#include "hfcvp/validate.h"

namespace hfcvp {

struct UtteranceRecord {
  std::string id;
  std::string features;    // path relative to the dataset root
  std::string speaker_id;  // external name of the speaker
  int64_t label = 0;       // class index in [0, C)
  int64_t frame_count = 0;

  bool operator==(const UtteranceRecord &) const = default;
};

enum class EmbeddingKey { kUtterance, kSpeaker };

struct DatasetManifest {
  std::vector<UtteranceRecord> records;
  int64_t num_classes = 0;
  std::vector<int64_t> class_counts;
  FeatureConfig features;
  EmbeddingKey embedding_key = EmbeddingKey::kUtterance;
  nlohmann::json provenance = nlohmann::json::object();  // free-form

  std::vector<SpeakerLabel> Labels() const;
};

void to_json(nlohmann::json &j, const DatasetManifest &m);
void from_json(const nlohmann::json &j, DatasetManifest &m);

ValidationReport Validate(const DatasetManifest &manifest);

DatasetManifest LoadManifest(const std::filesystem::path &dataset_root);
void SaveManifest(const std::filesystem::path &dataset_root, const DatasetManifest &m);

// ---------------------------------------------------------------------------
// Class prior

enum class PriorMode {
  kNormalized,       // counts / total
  kLiteralSoftmax,   // softmax(counts); degenerate for realistic counts
};

/// Throws kEmptyData for an empty label list, kRange for labels >= C.
ClassPrior EstimatePrior(std::span<const SpeakerLabel> labels, int64_t num_classes,
                         PriorMode mode = PriorMode::kNormalized);

// ---------------------------------------------------------------------------
// Toy corpus

/// Generative parameters of one synthetic speaker.
struct ToySpeaker {
  double tilt = 0.0;         // slope across the feature axis
  double bump_center = 40;   // feature index of the formant-like bump
  double bump_width = 5.0;
  double bump_height = 1.0;
  double energy = 0.0;       // additive offset on every bin
};

struct ToyCorpusConfig {
  int64_t num_classes = 8;
  int64_t utterances_per_class = 100;
  int64_t min_frames = 40;
  int64_t max_frames = 120;
  int64_t content_units = 24;    // size of the shared "phone" inventory
  int64_t min_unit_frames = 5;
  int64_t max_unit_frames = 15;
  double content_noise = 0.3;
  double feature_scale = 0.2;    // applied to every generated value
  uint64_t seed = 7;
  uint64_t embedding_seed = 1234;
  /// Empty: draw speakers from `seed`.  Otherwise exactly num_classes entries.
  std::vector<ToySpeaker> speakers;
};

ValidationReport Validate(const ToyCorpusConfig &cfg);

std::vector<ToySpeaker> ToySpeakers(const ToyCorpusConfig &cfg);

/// Writes manifest.json, features/ and embeddings/ under `root` (which must
/// exist).  Deterministic in cfg: identical configs give identical bytes.
DatasetManifest GenerateToyCorpus(const ToyCorpusConfig &cfg,
                                  const std::filesystem::path &root);

/// Seeded unit vector of length 192 for `key`; the toy stand-in for a
/// pretrained speaker-embedding extractor.
SpeakerEmbedding ToyEmbedding(uint64_t seed, const std::string &key);

// ---------------------------------------------------------------------------
// Embedding provisioning

class EmbeddingProvider {
 public:
  /// Precomputed vectors under <root>/embeddings/, keyed per manifest.
  /// With `average_per_speaker`, utterance-keyed tables are averaged over
  /// each speaker's utterances.
  static EmbeddingProvider FromFiles(const std::filesystem::path &root,
                                     const DatasetManifest &manifest,
                                     bool average_per_speaker = false);
  /// One seeded unit vector per speaker id.
  static EmbeddingProvider Toy(uint64_t seed);

  SpeakerEmbedding Get(const UtteranceRecord &record) const;

 private:
  enum class Mode { kFiles, kToy };
  Mode mode_ = Mode::kToy;
  uint64_t seed_ = 0;
  EmbeddingKey key_ = EmbeddingKey::kSpeaker;
  std::map<std::string, SpeakerEmbedding> table_;
};

// ---------------------------------------------------------------------------
// In-memory dataset and batching

class Dataset {
 public:
  /// Loads the manifest, every feature file and every embedding.
  static Dataset Load(const std::filesystem::path &root,
                      bool average_embeddings_per_speaker = false);
  /// Builds a dataset from values already in memory (no files involved).
  static Dataset FromMemory(DatasetManifest manifest, std::vector<MelSpectrogram> features,
                            std::vector<SpeakerEmbedding> embeddings);

  const DatasetManifest &manifest() const { return manifest_; }
  const std::filesystem::path &root() const { return root_; }
  std::size_t size() const { return features_.size(); }
  const MelSpectrogram &features(std::size_t i) const { return features_[i]; }
  const SpeakerEmbedding &embedding(std::size_t i) const { return embeddings_[i]; }
  const UtteranceRecord &record(std::size_t i) const { return manifest_.records[i]; }

  /// Subset (shares nothing; copies the selected rows).
  Dataset Subset(std::span<const std::size_t> indices) const;

 private:
  std::filesystem::path root_;
  DatasetManifest manifest_;
  std::vector<MelSpectrogram> features_;
  std::vector<SpeakerEmbedding> embeddings_;
};

/// Zero-padded batch.  mask is float [B, T] with 1 on real frames.
struct Batch {
  torch::Tensor features;    // [B, T, 80]
  torch::Tensor mask;        // [B, T]
  torch::Tensor labels;      // [B] int64
  torch::Tensor embeddings;  // [B, 192]
  std::vector<std::size_t> indices;
};

Batch MakeBatch(const Dataset &dataset, std::span<const std::size_t> indices);

/// Pads arbitrary frame matrices (any width) into [B, Tmax, F] + mask.
std::pair<torch::Tensor, torch::Tensor> PadFrames(
    std::span<const FrameMatrix *const> frames);

/// Shuffled partition of [0, n) into consecutive batches; the order is a
/// pure function of (seed, epoch).  Throws kConfig if batch_size < 1.
std::vector<std::vector<std::size_t>> EpochBatches(std::size_t n, int64_t batch_size,
                                                   uint64_t seed, int64_t epoch);

/// Iterates the batches of one epoch in order.
class BatchStream {
 public:
  BatchStream(const Dataset &dataset, int64_t batch_size, uint64_t seed, int64_t epoch);
  bool Next(Batch *batch);
  std::size_t num_batches() const { return plan_.size(); }

 private:
  const Dataset &dataset_;
  std::vector<std::vector<std::size_t>> plan_;
  std::size_t cursor_ = 0;
};

}  // namespace hfcvp

#endif  // HFCVP_DATASET_H_
