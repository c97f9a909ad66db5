// hfcvp/batch_losses.h

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

#ifndef HFCVP_BATCH_LOSSES_H_
#define HFCVP_BATCH_LOSSES_H_

// Differentiable batch forms of the objectives in losses.h.  Each returns a
// scalar tensor equal to the mean over the batch of the per-sequence loss.
//   probs:  [B, C] finder outputs
//   prior:  [C]
//   labels: [B] int64 class indices
//   mask:   [B, T] with 1 on valid frames

#include <torch/torch.h>

#include "hfcvp/config.h"

namespace hfcvp {

torch::Tensor BatchLeakageMse(const torch::Tensor &probs, const torch::Tensor &prior);
torch::Tensor BatchFinderMse(const torch::Tensor &probs, const torch::Tensor &labels);
torch::Tensor BatchFinderKl(const torch::Tensor &probs, const torch::Tensor &labels);
torch::Tensor BatchLeakageKl(const torch::Tensor &probs, const torch::Tensor &prior);

torch::Tensor BatchLeakage(LossRegime regime, const torch::Tensor &probs,
                           const torch::Tensor &prior);
torch::Tensor BatchFinder(LossRegime regime, const torch::Tensor &probs,
                          const torch::Tensor &labels);

/// Masked MSE over valid frame-feature cells of [B, T, F] tensors.
torch::Tensor BatchReconstructionMse(const torch::Tensor &pred,
                                     const torch::Tensor &target,
                                     const torch::Tensor &mask);

}  // namespace hfcvp

#endif  // HFCVP_BATCH_LOSSES_H_
