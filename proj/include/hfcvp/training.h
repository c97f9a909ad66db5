// hfcvp/training.h

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

#ifndef HFCVP_TRAINING_H_
#define HFCVP_TRAINING_H_

// Alternating adversarial training.  Per batch the finder takes
// `finder_steps_per_generator_step` steps on a detached h, then hider and
// combiner take one step on L_G = L_combiner + beta * L_leakage.
//
// Epochs are numbered from 1.  At the start of epoch e the torch generator
// is reseeded from (seed, e) and the batch order is a function of (seed, e),
// so a run resumed from an epoch-boundary checkpoint continues bit-exactly.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "hfcvp/config.h"
#include "hfcvp/dataset.h"
#include "hfcvp/networks.h"
#include "hfcvp/types.h"

namespace hfcvp {

struct EpochMetrics {
  int64_t epoch = 0;
  double lr_g = 0.0;
  double lr_f = 0.0;
  double loss_combiner = 0.0;
  double loss_leakage = 0.0;
  double loss_finder = 0.0;
  double loss_g = 0.0;  // loss_combiner + beta * loss_leakage
  std::optional<double> probe_acc;

  bool operator==(const EpochMetrics &) const = default;
};

void to_json(nlohmann::json &j, const EpochMetrics &m);
void from_json(const nlohmann::json &j, EpochMetrics &m);

class MetricsLog {
 public:
  /// Throws Error(kValidation) unless m.epoch exceeds the last epoch.
  void Append(const EpochMetrics &m);
  const std::vector<EpochMetrics> &rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  const EpochMetrics &back() const { return rows_.back(); }
  /// Drops rows with epoch > `epoch`.
  void TruncateAfter(int64_t epoch);

  /// epoch,lr_g,lr_f,loss_combiner,loss_leakage,loss_finder,probe_acc
  /// (probe_acc empty when not measured).
  void WriteCsv(const std::filesystem::path &path) const;
  static MetricsLog ReadCsv(const std::filesystem::path &path);
  /// One JSON object per line; also carries loss_g.
  void WriteJsonLines(const std::filesystem::path &path) const;

  nlohmann::json ToJson() const;
  static MetricsLog FromJson(const nlohmann::json &j);

 private:
  std::vector<EpochMetrics> rows_;
};

/// (lr_g, lr_f) for a 1-indexed epoch: base up to decay_start_epoch, then
/// base * gamma^(epoch - decay_start_epoch).  Throws kConfig if epoch < 0.
std::pair<double, double> LrAt(int64_t epoch, const TrainConfig &config);

/// Everything the loop mutates.
struct TrainState {
  TrainConfig config;
  NetworkConfig networks;
  Hider hider{nullptr};
  Finder finder{nullptr};
  Combiner combiner{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_generator;
  std::unique_ptr<torch::optim::Adam> opt_finder;

  int64_t epoch = 0;        // last completed epoch
  int64_t global_step = 0;  // generator steps taken
  double lr_g = 0.0;
  double lr_f = 0.0;

  // Sums over the epoch in progress.
  double sum_combiner = 0.0;
  double sum_leakage = 0.0;
  double sum_finder = 0.0;
  int64_t generator_steps = 0;
  int64_t finder_steps = 0;

  int64_t nonfinite_streak = 0;
  double best_loss_g = 0.0;
  int64_t best_epoch = 0;  // 0: none yet
  MetricsLog metrics;

  /// Fresh networks initialised from config.seed; learning rates of epoch 1.
  static TrainState Create(const TrainConfig &config, const NetworkConfig &networks);

  int64_t num_classes() const { return networks.finder.num_classes; }
  std::vector<torch::Tensor> GeneratorParameters() const;
  /// Sets both optimisers' learning rates to LrAt(epoch).
  void SetLearningRates(int64_t epoch);
};

/// Prior as a float tensor [C].
torch::Tensor PriorTensor(const ClassPrior &prior);

/// One finder update on a detached h = hider(x).  Returns L_finder.  On a
/// non-finite loss no parameter changes and Error(kDivergence) is thrown.
double TrainStepFinder(TrainState &state, const Batch &batch);

struct GeneratorLosses {
  double combiner = 0.0;  // pre-net + post-net reconstruction MSE
  double leakage = 0.0;
  double total = 0.0;     // combiner + beta * leakage
};

/// One hider + combiner update; the finder is used frozen.  Same divergence
/// contract as TrainStepFinder.
GeneratorLosses TrainStepGenerator(TrainState &state, const Batch &batch,
                                   const torch::Tensor &prior);

/// Computes h = hider(x) for every utterance (eval mode, no gradient).
std::vector<FrameMatrix> ComputeHidden(Hider &hider, const Dataset &dataset,
                                       int64_t batch_size = 32);

struct RunOptions {
  std::filesystem::path out_dir;
  /// Checkpoint directory to resume from (its epoch must be < config.epochs).
  std::optional<std::filesystem::path> resume_from;
  /// Called after epochs selected by probe_every; returns probe accuracy.
  std::function<double(TrainState &)> probe;
  /// Called after every epoch (logging).
  std::function<void(const EpochMetrics &)> on_epoch;
};

struct RunResult {
  MetricsLog metrics;
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
};

/// Trains to config.epochs, writing under out_dir:
///   metrics.csv, metrics.jsonl
///   checkpoints/epoch_NNNN/ (every checkpoint_every epochs), best/, last/
/// On divergence writes checkpoints/diverged/ and throws Error(kDivergence).
RunResult RunTraining(const TrainConfig &config, const NetworkConfig &networks,
                      const Dataset &dataset, const ClassPrior &prior,
                      const RunOptions &options);

/// Runs one epoch (state.epoch + 1) over `dataset`; appends nothing.
EpochMetrics TrainEpoch(TrainState &state, const Dataset &dataset,
                        const torch::Tensor &prior);

}  // namespace hfcvp

#endif  // HFCVP_TRAINING_H_
