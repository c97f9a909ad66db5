// losses/batch_losses.cc

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

#include "hfcvp/batch_losses.h"

#include <string>

#include "hfcvp/error.h"
#include "hfcvp/losses.h"

namespace hfcvp {

namespace {

void CheckProbs(const torch::Tensor &probs, int64_t classes, const char *what) {
  if (probs.dim() != 2 || probs.size(1) != classes)
    Fail(ErrorKind::kDimension, std::string(what) + ": probs must be [B, " +
                                    std::to_string(classes) + "]");
}

void CheckLabels(const torch::Tensor &probs, const torch::Tensor &labels,
                 const char *what) {
  if (probs.dim() != 2 || labels.dim() != 1 || labels.size(0) != probs.size(0))
    Fail(ErrorKind::kDimension, std::string(what) + ": labels must be [B]");
}

}  // namespace

torch::Tensor BatchLeakageMse(const torch::Tensor &probs, const torch::Tensor &prior) {
  CheckProbs(probs, prior.size(0), "leakage_mse");
  return (probs - prior.to(probs.dtype()).unsqueeze(0)).pow(2).mean();
}

torch::Tensor BatchFinderMse(const torch::Tensor &probs, const torch::Tensor &labels) {
  CheckLabels(probs, labels, "finder_mse");
  auto truth = torch::one_hot(labels, probs.size(1)).to(probs.dtype());
  return (probs - truth).pow(2).mean();
}

torch::Tensor BatchFinderKl(const torch::Tensor &probs, const torch::Tensor &labels) {
  CheckLabels(probs, labels, "finder_kl");
  auto picked = probs.gather(1, labels.unsqueeze(1)).squeeze(1);
  return -picked.clamp_min(kLogEpsilon).log().mean();
}

torch::Tensor BatchLeakageKl(const torch::Tensor &probs, const torch::Tensor &prior) {
  CheckProbs(probs, prior.size(0), "leakage_kl");
  auto logf = probs.clamp_min(kLogEpsilon).log();
  return -(prior.to(probs.dtype()).unsqueeze(0) * logf).sum(1).mean();
}

torch::Tensor BatchLeakage(LossRegime regime, const torch::Tensor &probs,
                           const torch::Tensor &prior) {
  return regime == LossRegime::kMse ? BatchLeakageMse(probs, prior)
                                    : BatchLeakageKl(probs, prior);
}

torch::Tensor BatchFinder(LossRegime regime, const torch::Tensor &probs,
                          const torch::Tensor &labels) {
  return regime == LossRegime::kMse ? BatchFinderMse(probs, labels)
                                    : BatchFinderKl(probs, labels);
}

torch::Tensor BatchReconstructionMse(const torch::Tensor &pred,
                                     const torch::Tensor &target,
                                     const torch::Tensor &mask) {
  if (pred.sizes() != target.sizes() || pred.dim() != 3 || mask.dim() != 2 ||
      mask.size(0) != pred.size(0) || mask.size(1) != pred.size(1))
    Fail(ErrorKind::kDimension, "reconstruction_mse: shape mismatch");
  auto m = mask.to(pred.dtype()).unsqueeze(2);
  auto valid = m.sum();
  if (valid.item<double>() <= 0.0)
    Fail(ErrorKind::kEmptyData, "reconstruction_mse: mask has no valid frame");
  return ((pred - target).pow(2) * m).sum() / (valid * pred.size(2));
}

}  // namespace hfcvp
