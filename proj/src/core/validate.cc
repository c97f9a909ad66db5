// core/validate.cc

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

#include "hfcvp/validate.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "hfcvp/error.h"

namespace hfcvp {

namespace {

std::string Num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

template <typename T>
void CheckFinite(std::span<const T> values, std::vector<std::string> *out) {
  std::size_t bad = 0;
  for (T v : values)
    if (!std::isfinite(static_cast<double>(v))) ++bad;
  if (bad > 0) out->push_back("non-finite entry (" + std::to_string(bad) + " cells)");
}

void CheckSimplex(const std::vector<double> &p, double tol,
                  std::vector<std::string> *out) {
  if (p.empty()) {
    out->push_back("empty probability vector");
    return;
  }
  CheckFinite(std::span<const double>(p), out);
  std::size_t negative = 0;
  for (double v : p)
    if (v < 0.0) ++negative;
  if (negative > 0)
    out->push_back("negative probability (" + std::to_string(negative) +
                   " entries)");
  double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(std::fabs(sum - 1.0) <= tol))
    out->push_back("sum != 1 (got " + Num(sum) + ")");
}

void CheckFrames(const FrameMatrix &m, int64_t expected_cols,
                 std::vector<std::string> *out) {
  if (m.cols() != expected_cols)
    out->push_back("feature dimension is " + std::to_string(m.cols()) +
                   ", expected " + std::to_string(expected_cols));
  if (m.rows() < 1) out->push_back("frame count must be >= 1");
  CheckFinite(m.data(), out);
}

}  // namespace

bool ValidationReport::Mentions(const std::string &needle) const {
  for (const auto &v : violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

std::string ValidationReport::ToString() const {
  std::string s;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) s += "; ";
    s += violations[i];
  }
  return s;
}

ValidationReport Validate(const MelSpectrogram &mel) {
  ValidationReport r;
  CheckFrames(mel.frames, kMelBins, &r.violations);
  if (mel.sample_rate_hz <= 0) r.violations.push_back("sample rate must be positive");
  return r;
}

ValidationReport Validate(const HiddenRepresentation &hidden,
                          std::optional<int64_t> source_frames) {
  ValidationReport r;
  CheckFrames(hidden.frames, kHiddenDim, &r.violations);
  if (source_frames && *source_frames != hidden.frames.rows())
    r.violations.push_back("frame count " + std::to_string(hidden.frames.rows()) +
                           " differs from source " +
                           std::to_string(*source_frames));
  return r;
}

ValidationReport Validate(SpeakerLabel label, int64_t num_classes) {
  ValidationReport r;
  if (num_classes < 1) r.violations.push_back("num_classes must be >= 1");
  if (label.class_index < 0 || label.class_index >= num_classes)
    r.violations.push_back("label " + std::to_string(label.class_index) +
                           " outside [0, " + std::to_string(num_classes) + ")");
  return r;
}

ValidationReport Validate(const TrueClassIndicator &indicator) {
  ValidationReport r;
  std::size_t ones = 0;
  bool binary = true;
  for (double v : indicator.onehot) {
    if (v == 1.0) ++ones;
    else if (v != 0.0) binary = false;
  }
  if (indicator.onehot.empty()) r.violations.push_back("empty indicator");
  if (!binary) r.violations.push_back("entries must be 0 or 1");
  if (ones != 1) r.violations.push_back("must contain exactly one 1");
  return r;
}

ValidationReport Validate(const ClassDistribution &dist) {
  ValidationReport r;
  CheckSimplex(dist.probs, 1e-6, &r.violations);
  return r;
}

ValidationReport Validate(const ClassPrior &prior) {
  ValidationReport r;
  CheckSimplex(prior.probs, 1e-9, &r.violations);
  if (!prior.counts.empty()) {
    if (prior.counts.size() != prior.probs.size())
      r.violations.push_back("counts length differs from probs length");
    for (int64_t c : prior.counts)
      if (c < 0) {
        r.violations.push_back("negative class count");
        break;
      }
  }
  return r;
}

ValidationReport Validate(const SpeakerEmbedding &embedding) {
  ValidationReport r;
  if (static_cast<int64_t>(embedding.values.size()) != kEmbeddingDim)
    r.violations.push_back("embedding dimension is " +
                           std::to_string(embedding.values.size()) +
                           ", expected " + std::to_string(kEmbeddingDim));
  CheckFinite(std::span<const float>(embedding.values), &r.violations);
  return r;
}

ValidationReport Validate(const TrainConfig &c) {
  ValidationReport r;
  auto &v = r.violations;
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta)) v.push_back("beta must be >= 0");
  if (!(c.lr_generator > 0.0)) v.push_back("lr_generator must be > 0");
  if (!(c.lr_finder > 0.0)) v.push_back("lr_finder must be > 0");
  if (!(c.decay_gamma > 0.0 && c.decay_gamma <= 1.0))
    v.push_back("decay_gamma must be in (0, 1]");
  if (c.decay_start_epoch < 0) v.push_back("decay_start_epoch must be >= 0");
  if (c.epochs < 1) v.push_back("epochs must be >= 1");
  if (c.batch_size < 1) v.push_back("batch_size must be >= 1");
  if (c.finder_steps_per_generator_step < 1)
    v.push_back("finder_steps_per_generator_step must be >= 1");
  if (!std::isfinite(c.grad_clip_norm)) v.push_back("grad_clip_norm must be finite");
  if (c.checkpoint_every < 0) v.push_back("checkpoint_every must be >= 0");
  if (c.probe_every < 0) v.push_back("probe_every must be >= 0");
  if (c.divergence_patience < 1) v.push_back("divergence_patience must be >= 1");
  return r;
}

void ThrowIfInvalid(const ValidationReport &report, const std::string &what) {
  if (!report.ok())
    Fail(ErrorKind::kValidation, what + ": " + report.ToString());
}

void ThrowIfInvalidConfig(const ValidationReport &report, const std::string &what) {
  if (!report.ok()) Fail(ErrorKind::kConfig, what + ": " + report.ToString());
}

}  // namespace hfcvp
