// hfcvp/anonymise.h

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

#ifndef HFCVP_ANONYMISE_H_
#define HFCVP_ANONYMISE_H_

// Inference: y = combiner_post(hider(x), e_target).  Targets come from an
// external pool and are chosen from identifiers only, never from the audio,
// so the choice itself carries no information about the source voice.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hfcvp/dataset.h"
#include "hfcvp/networks.h"
#include "hfcvp/types.h"
#include "hfcvp/validate.h"

namespace hfcvp {

enum class TargetMode { kUtteranceRandom, kFixedTarget, kSpeakerConsistentRandom };

const char *TargetModeName(TargetMode mode);
/// "utterance-random", "fixed-target" or "speaker-consistent-random".
TargetMode ParseTargetMode(const std::string &name);

struct PoolEntry {
  std::string id;
  SpeakerEmbedding embedding;
};

struct TargetPolicy {
  TargetMode mode = TargetMode::kUtteranceRandom;
  std::vector<PoolEntry> pool;
  uint64_t seed = 0;
  std::string fixed_id;  // fixed-target: pool id to use; empty = first entry
};

ValidationReport Validate(const TargetPolicy &policy);

/// Index into policy.pool.  utterance-random depends on (seed, utterance_id)
/// only, speaker-consistent-random on (seed, source_speaker_id) only.
/// Throws Error(kConfig) for an invalid policy.
std::size_t SelectTargetIndex(const TargetPolicy &policy, std::string_view utterance_id,
                              std::string_view source_speaker_id);
const PoolEntry &SelectTarget(const TargetPolicy &policy, std::string_view utterance_id,
                              std::string_view source_speaker_id);

/// Every *.bin under `dir` (one rank-1 record of length 192), id = stem,
/// sorted by id.
std::vector<PoolEntry> LoadPool(const std::filesystem::path &dir);
/// n seeded unit vectors with ids ext0000, ext0001, ...
std::vector<PoolEntry> ToyPool(int64_t n, uint64_t seed);
/// "toy:N" or a directory path.
std::vector<PoolEntry> PoolFromSpec(const std::string &spec, uint64_t seed);

/// Frame count is preserved; the finder is not involved.
MelSpectrogram AnonymiseUtterance(const MelSpectrogram &x, const SpeakerEmbedding &target,
                                  Hider &hider, Combiner &combiner);

struct AnonymiseRow {
  std::string utterance_id;
  std::string source_speaker;
  std::string target_id;
  std::string status;  // "ok" or "error"
  std::string message;
};

struct AnonymiseReport {
  std::vector<AnonymiseRow> rows;
  int64_t failures = 0;

  /// utterance_id,source_speaker,target_id,status,message
  void WriteCsv(const std::filesystem::path &path) const;
};

struct AnonymiseOptions {
  bool export_hidden = false;  // also write hidden/<id>.bin
};

/// Writes under out_dir:
///   features/<id>.bin, embeddings/<id>.bin (the chosen target),
///   manifest.json (utterance-keyed embeddings), mapping.csv,
///   hidden/<id>.bin when requested.
/// The checkpoint is read through LoadInferenceModels (no finder).
/// Per-utterance failures are recorded in the report, not thrown.
AnonymiseReport AnonymiseCorpus(const std::filesystem::path &data_root,
                                const TargetPolicy &policy,
                                const std::filesystem::path &checkpoint,
                                const std::filesystem::path &out_dir,
                                const AnonymiseOptions &options = {});

/// In-memory variant used by evaluation; returns the anonymised features in
/// dataset order.
std::vector<MelSpectrogram> AnonymiseDataset(const Dataset &dataset, const TargetPolicy &policy,
                                             Hider &hider, Combiner &combiner,
                                             std::vector<std::string> *target_ids = nullptr);

}  // namespace hfcvp

#endif  // HFCVP_ANONYMISE_H_
