// hfcvp/checkpoint.h

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

#ifndef HFCVP_CHECKPOINT_H_
#define HFCVP_CHECKPOINT_H_

// Checkpoint directory:
//
//   manifest.json       network config, parameter names/shapes, checksums
//   state.json          train config, counters, learning rates, metrics
//   hider.bin           HFCVP1 records, one per parameter, manifest order
//   combiner.bin
//   finder.bin          needed only for resuming training
//   opt_generator.pt    optimiser moments (torch archive)
//   opt_finder.pt
//
// Inference reads manifest.json, hider.bin and combiner.bin only.

#include <filesystem>

#include <torch/torch.h>

#include "hfcvp/networks.h"
#include "hfcvp/training.h"

namespace hfcvp {

/// Parameters (then buffers) in registration order as HFCVP1 records.
void SaveModuleParameters(const torch::nn::Module &module,
                          const std::filesystem::path &path);
/// Throws Error(kLoad) on a count or shape mismatch.
void LoadModuleParameters(torch::nn::Module &module, const std::filesystem::path &path);

void SaveCheckpoint(const TrainState &state, const std::filesystem::path &dir);
/// Full state for resuming.  Throws Error(kLoad) if anything is missing.
TrainState LoadCheckpoint(const std::filesystem::path &dir);

struct InferenceModels {
  NetworkConfig networks;
  Hider hider{nullptr};
  Combiner combiner{nullptr};
};

/// Hider and combiner in eval mode; never touches finder.bin.
InferenceModels LoadInferenceModels(const std::filesystem::path &dir);

}  // namespace hfcvp

#endif  // HFCVP_CHECKPOINT_H_
