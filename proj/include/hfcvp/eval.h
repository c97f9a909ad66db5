// hfcvp/eval.h

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

#ifndef HFCVP_EVAL_H_
#define HFCVP_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hfcvp/config.h"
#include "hfcvp/dataset.h"
#include "hfcvp/networks.h"
#include "hfcvp/types.h"

namespace hfcvp {

/// Verification scores, higher = more similar.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

/// Equal error rate.  Thresholds are the pooled unique scores (plus one
/// above the maximum); a trial is accepted when score >= t.  The EER is
/// interpolated linearly between the two thresholds where FRR - FAR changes
/// sign.  Throws Error(kInput) if either list is empty or non-finite.
double ComputeEer(const ScoreSet &scores);

/// Cosine of the angle between a and b.  Throws kInput for zero norm,
/// kDimension for a length mismatch.
double CosineScore(std::span<const float> a, std::span<const float> b);
double CosineScore(const SpeakerEmbedding &a, const SpeakerEmbedding &b);

/// Trial list: CSV "enroll_id,test_id,label,score" with label genuine or
/// impostor.  A header line is optional.
ScoreSet ReadTrialList(const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Probe

struct ProbeConfig {
  int64_t epochs = 15;
  int64_t batch_size = 32;
  double lr = 1e-3;
  double train_fraction = 0.8;
  uint64_t seed = 0;
  FinderConfig architecture;  // num_classes is overwritten with C
};

struct ProbeResult {
  double accuracy = 0.0;       // on the held-out split
  double train_accuracy = 0.0;
  int64_t train_size = 0;
  int64_t test_size = 0;
};

/// Stratified split: per class, floor(train_fraction * n_c) examples train
/// and the rest test, chosen by a permutation seeded from cfg.seed.
/// Throws Error(kData) if any class has fewer than 2 examples.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> StratifiedSplit(
    std::span<const int64_t> labels, int64_t num_classes, double train_fraction,
    uint64_t seed);

/// Trains a fresh finder-architecture classifier with cross-entropy on
/// (representation, label) pairs and reports held-out accuracy.
ProbeResult TrainProbe(std::span<const FrameMatrix> representations,
                       std::span<const int64_t> labels, int64_t num_classes,
                       const ProbeConfig &cfg);

// ---------------------------------------------------------------------------
// Toy verification (a stand-in for a pretrained verifier)

/// Mean over frames, as a vector of length F.
std::vector<float> MeanFrame(const FrameMatrix &m);

/// Builds trials from per-utterance vectors: every utterance in `tests`
/// is scored (cosine of mean frames) against the enrollment vector of each
/// speaker, formed by averaging that speaker's `enroll` utterances.
ScoreSet ToyVerificationScores(std::span<const FrameMatrix> enroll,
                               std::span<const int64_t> enroll_labels,
                               std::span<const FrameMatrix> tests,
                               std::span<const int64_t> test_labels);

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  double beta = 0.0;
  double loss_combiner = 0.0;
  double loss_leakage = 0.0;
  std::optional<double> probe_acc;
  std::optional<double> eer;
  bool diverged = false;

  bool operator==(const SweepRow &) const = default;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // sorted by beta, betas distinct

  /// beta,loss_combiner,loss_leakage,probe_acc,eer,diverged
  void WriteCsv(const std::filesystem::path &path) const;
  static SweepReport ReadCsv(const std::filesystem::path &path);
  nlohmann::json ToJson() const;
};

struct SweepOptions {
  std::filesystem::path out_dir;  // one subdirectory per beta
  bool measure_probe = true;
  bool measure_eer = true;
  ProbeConfig probe;
};

/// One training run per beta from the same base config (same seed).  A
/// run that diverges is reported with diverged = true and the sweep goes on.
/// Throws kConfig for betas outside (0, 0.07] or duplicated betas.
SweepReport RunSweep(std::span<const double> betas, const TrainConfig &base,
                     const NetworkConfig &networks, const Dataset &dataset,
                     const ClassPrior &prior, const SweepOptions &options);

/// Privacy measurements for a trained hider/combiner on `dataset`: probe on
/// h, and toy-verifier EER with anonymised test utterances against original
/// enrollment.
struct PrivacyMetrics {
  double probe_acc = 0.0;
  double eer = 0.0;
};
PrivacyMetrics MeasurePrivacy(Hider &hider, Combiner &combiner, const Dataset &dataset,
                              const ProbeConfig &probe, uint64_t seed, bool measure_probe,
                              bool measure_eer);

}  // namespace hfcvp

#endif  // HFCVP_EVAL_H_
