// hfcvp/validate.h

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

#ifndef HFCVP_VALIDATE_H_
#define HFCVP_VALIDATE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hfcvp/config.h"
#include "hfcvp/types.h"

namespace hfcvp {

/// Every violated invariant of a value, one human-readable line each.
/// Validation never throws; callers decide what to do with the report.
struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  bool Mentions(const std::string &needle) const;
  std::string ToString() const;
};

ValidationReport Validate(const MelSpectrogram &mel);
ValidationReport Validate(const HiddenRepresentation &hidden,
                          std::optional<int64_t> source_frames = std::nullopt);
ValidationReport Validate(SpeakerLabel label, int64_t num_classes);
ValidationReport Validate(const TrueClassIndicator &indicator);
ValidationReport Validate(const ClassDistribution &dist);
ValidationReport Validate(const ClassPrior &prior);
ValidationReport Validate(const SpeakerEmbedding &embedding);
ValidationReport Validate(const TrainConfig &config);

/// Throws Error(kValidation) carrying the report text when it is not ok.
void ThrowIfInvalid(const ValidationReport &report, const std::string &what);
/// Same, but Error(kConfig): for settings rather than data.
void ThrowIfInvalidConfig(const ValidationReport &report, const std::string &what);

}  // namespace hfcvp

#endif  // HFCVP_VALIDATE_H_
