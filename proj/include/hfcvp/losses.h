// hfcvp/losses.h

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

#ifndef HFCVP_LOSSES_H_
#define HFCVP_LOSSES_H_

// Adversarial objectives on a single finder output, in double precision.
//
// MSE regime (the default):
//   leakage = 1/C sum_c (f_c - p_c)^2        finder = 1/C sum_c (f_c - I_c)^2
// KL regime (constant terms dropped):
//   leakage = -sum_c p_c log f_c             finder = -log f_y
// Logarithms clamp their argument to kLogEpsilon, so the KL gradients vanish
// where f_c < kLogEpsilon.  Every loss has a matching *Grad returning
// d loss / d f.

#include <cstdint>
#include <span>
#include <vector>

#include "hfcvp/types.h"

namespace hfcvp {

inline constexpr double kLogEpsilon = 1e-8;

double LeakageMse(const ClassDistribution &f, const ClassPrior &prior);
double FinderMse(const ClassDistribution &f, const TrueClassIndicator &truth);
double FinderKl(const ClassDistribution &f, SpeakerLabel true_class);
double LeakageKl(const ClassDistribution &f, const ClassPrior &prior);

std::vector<double> LeakageMseGrad(const ClassDistribution &f,
                                   const ClassPrior &prior);
std::vector<double> FinderMseGrad(const ClassDistribution &f,
                                  const TrueClassIndicator &truth);
std::vector<double> FinderKlGrad(const ClassDistribution &f,
                                 SpeakerLabel true_class);
std::vector<double> LeakageKlGrad(const ClassDistribution &f,
                                  const ClassPrior &prior);

/// Shannon entropy (nats); the lower bound of LeakageKl over f.
double Entropy(std::span<const double> p);

/// Mean squared error over the frame-feature cells of frames with
/// mask[t] != 0.  Throws kDimension on shape mismatch, kEmptyData if no
/// frame is valid.
double ReconstructionMse(const MelSpectrogram &pred, const MelSpectrogram &target,
                         std::span<const uint8_t> mask);

/// L_G = recon + beta * leakage.
double GeneratorTotal(double recon, double leakage, double beta);

}  // namespace hfcvp

#endif  // HFCVP_LOSSES_H_
