// losses/losses.cc

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

#include "hfcvp/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hfcvp/error.h"

namespace hfcvp {

namespace {

void CheckSameLength(std::size_t a, std::size_t b, const char *what) {
  if (a != b || a == 0)
    Fail(ErrorKind::kDimension, std::string(what) + ": lengths " +
                                    std::to_string(a) + " and " +
                                    std::to_string(b) + " differ or are empty");
}

std::size_t CheckLabel(const ClassDistribution &f, SpeakerLabel y) {
  if (y.class_index < 0 || y.class_index >= static_cast<int64_t>(f.probs.size()))
    Fail(ErrorKind::kRange, "true class " + std::to_string(y.class_index) +
                                " outside distribution of length " +
                                std::to_string(f.probs.size()));
  return static_cast<std::size_t>(y.class_index);
}

double SafeLog(double v) { return std::log(std::max(v, kLogEpsilon)); }

// d/dv log(max(v, eps))
double SafeLogGrad(double v) { return v > kLogEpsilon ? 1.0 / v : 0.0; }

double MeanSquaredDiff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

std::vector<double> MeanSquaredDiffGrad(std::span<const double> a,
                                        std::span<const double> b) {
  std::vector<double> g(a.size());
  const double scale = 2.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = scale * (a[i] - b[i]);
  return g;
}

}  // namespace

double LeakageMse(const ClassDistribution &f, const ClassPrior &prior) {
  CheckSameLength(f.probs.size(), prior.probs.size(), "leakage_mse");
  return MeanSquaredDiff(f.probs, prior.probs);
}

double FinderMse(const ClassDistribution &f, const TrueClassIndicator &truth) {
  CheckSameLength(f.probs.size(), truth.onehot.size(), "finder_mse");
  return MeanSquaredDiff(f.probs, truth.onehot);
}

double FinderKl(const ClassDistribution &f, SpeakerLabel true_class) {
  return -SafeLog(f.probs[CheckLabel(f, true_class)]);
}

double LeakageKl(const ClassDistribution &f, const ClassPrior &prior) {
  CheckSameLength(f.probs.size(), prior.probs.size(), "leakage_kl");
  double s = 0.0;
  for (std::size_t c = 0; c < f.probs.size(); ++c)
    if (prior.probs[c] != 0.0) s -= prior.probs[c] * SafeLog(f.probs[c]);
  return s;
}

std::vector<double> LeakageMseGrad(const ClassDistribution &f,
                                   const ClassPrior &prior) {
  CheckSameLength(f.probs.size(), prior.probs.size(), "leakage_mse");
  return MeanSquaredDiffGrad(f.probs, prior.probs);
}

std::vector<double> FinderMseGrad(const ClassDistribution &f,
                                  const TrueClassIndicator &truth) {
  CheckSameLength(f.probs.size(), truth.onehot.size(), "finder_mse");
  return MeanSquaredDiffGrad(f.probs, truth.onehot);
}

std::vector<double> FinderKlGrad(const ClassDistribution &f,
                                 SpeakerLabel true_class) {
  std::size_t y = CheckLabel(f, true_class);
  std::vector<double> g(f.probs.size(), 0.0);
  g[y] = -SafeLogGrad(f.probs[y]);
  return g;
}

std::vector<double> LeakageKlGrad(const ClassDistribution &f,
                                  const ClassPrior &prior) {
  CheckSameLength(f.probs.size(), prior.probs.size(), "leakage_kl");
  std::vector<double> g(f.probs.size(), 0.0);
  for (std::size_t c = 0; c < f.probs.size(); ++c)
    g[c] = -prior.probs[c] * SafeLogGrad(f.probs[c]);
  return g;
}

double Entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double ReconstructionMse(const MelSpectrogram &pred, const MelSpectrogram &target,
                         std::span<const uint8_t> mask) {
  const FrameMatrix &a = pred.frames, &b = target.frames;
  if (a.rows() != b.rows() || a.cols() != b.cols() ||
      static_cast<int64_t>(mask.size()) != a.rows())
    Fail(ErrorKind::kDimension, "reconstruction_mse: pred, target and mask "
                                "must share frame count and width");
  double sum = 0.0;
  int64_t valid = 0;
  for (int64_t t = 0; t < a.rows(); ++t) {
    if (!mask[static_cast<std::size_t>(t)]) continue;
    ++valid;
    auto ra = a.Row(t), rb = b.Row(t);
    for (int64_t c = 0; c < a.cols(); ++c) {
      double d = static_cast<double>(ra[c]) - static_cast<double>(rb[c]);
      sum += d * d;
    }
  }
  if (valid == 0) Fail(ErrorKind::kEmptyData, "reconstruction_mse: mask has no valid frame");
  return sum / static_cast<double>(valid * a.cols());
}

double GeneratorTotal(double recon, double leakage, double beta) {
  if (!(beta >= 0.0)) Fail(ErrorKind::kConfig, "beta must be >= 0");
  return recon + beta * leakage;
}

}  // namespace hfcvp
