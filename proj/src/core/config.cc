// core/config.cc

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

#include "hfcvp/config.h"

#include <set>

#include "hfcvp/error.h"

namespace hfcvp {

const char *LossRegimeName(LossRegime regime) {
  return regime == LossRegime::kMse ? "mse" : "kl";
}

LossRegime ParseLossRegime(const std::string &name) {
  if (name == "mse") return LossRegime::kMse;
  if (name == "kl") return LossRegime::kKl;
  Fail(ErrorKind::kConfig, "unknown loss regime '" + name + "' (mse|kl)");
}

void to_json(nlohmann::json &j, const TrainConfig &c) {
  j = nlohmann::json{
      {"beta", c.beta},
      {"lr_generator", c.lr_generator},
      {"lr_finder", c.lr_finder},
      {"decay_gamma", c.decay_gamma},
      {"decay_start_epoch", c.decay_start_epoch},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"loss_regime", LossRegimeName(c.loss_regime)},
      {"finder_steps_per_generator_step", c.finder_steps_per_generator_step},
      {"grad_clip_norm", c.grad_clip_norm},
      {"checkpoint_every", c.checkpoint_every},
      {"probe_every", c.probe_every},
      {"divergence_patience", c.divergence_patience},
  };
}

void from_json(const nlohmann::json &j, TrainConfig &c) {
  if (!j.is_object()) Fail(ErrorKind::kConfig, "train config must be an object");
  static const std::set<std::string> known = {
      "beta", "lr_generator", "lr_finder", "decay_gamma", "decay_start_epoch",
      "epochs", "batch_size", "seed", "loss_regime",
      "finder_steps_per_generator_step", "grad_clip_norm", "checkpoint_every",
      "probe_every", "divergence_patience"};
  for (const auto &item : j.items())
    if (!known.count(item.key()))
      Fail(ErrorKind::kConfig, "unknown train config key '" + item.key() + "'");
  try {
    c.beta = j.value("beta", c.beta);
    c.lr_generator = j.value("lr_generator", c.lr_generator);
    c.lr_finder = j.value("lr_finder", c.lr_finder);
    c.decay_gamma = j.value("decay_gamma", c.decay_gamma);
    c.decay_start_epoch = j.value("decay_start_epoch", c.decay_start_epoch);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss_regime"))
      c.loss_regime = ParseLossRegime(j.at("loss_regime").get<std::string>());
    c.finder_steps_per_generator_step = j.value(
        "finder_steps_per_generator_step", c.finder_steps_per_generator_step);
    c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.probe_every = j.value("probe_every", c.probe_every);
    c.divergence_patience = j.value("divergence_patience", c.divergence_patience);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("train config: ") + e.what());
  }
}

}  // namespace hfcvp
