// hfcvp/config.h

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

#ifndef HFCVP_CONFIG_H_
#define HFCVP_CONFIG_H_

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace hfcvp {

enum class LossRegime { kMse, kKl };

const char *LossRegimeName(LossRegime regime);
LossRegime ParseLossRegime(const std::string &name);

/// Hyperparameters of the adversarial training loop.
struct TrainConfig {
  double beta = 0.065;          // leakage weight in L_G
  double lr_generator = 2e-4;   // hider + combiner
  double lr_finder = 1e-4;
  double decay_gamma = 0.999;
  int64_t decay_start_epoch = 100;
  int64_t epochs = 200;
  int64_t batch_size = 32;
  uint64_t seed = 0;
  LossRegime loss_regime = LossRegime::kMse;
  int64_t finder_steps_per_generator_step = 1;
  double grad_clip_norm = 1.0;  // <= 0 disables clipping
  int64_t checkpoint_every = 10;
  int64_t probe_every = 0;      // 0: never probe during training
  int64_t divergence_patience = 3;

  bool operator==(const TrainConfig &) const = default;
};

// Unknown keys are rejected with Error(kConfig); missing keys keep defaults.
void to_json(nlohmann::json &j, const TrainConfig &c);
void from_json(const nlohmann::json &j, TrainConfig &c);

}  // namespace hfcvp

#endif  // HFCVP_CONFIG_H_
