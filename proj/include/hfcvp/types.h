// hfcvp/types.h

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

#ifndef HFCVP_TYPES_H_
#define HFCVP_TYPES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hfcvp {

inline constexpr int64_t kMelBins = 80;
inline constexpr int64_t kHiddenDim = 80;
inline constexpr int64_t kEmbeddingDim = 192;
inline constexpr int kDefaultSampleRate = 22050;

/// Time-major float32 matrix: row t holds the features of frame t.
class FrameMatrix {
 public:
  FrameMatrix() = default;
  FrameMatrix(int64_t rows, int64_t cols);  // zero-filled
  FrameMatrix(int64_t rows, int64_t cols, std::vector<float> data);

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }
  std::span<const float> Row(int64_t r) const {
    return std::span<const float>(data_).subspan(r * cols_, cols_);
  }
  float operator()(int64_t r, int64_t c) const { return data_[r * cols_ + c]; }
  float &operator()(int64_t r, int64_t c) { return data_[r * cols_ + c]; }

  bool operator==(const FrameMatrix &other) const = default;

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  std::vector<float> data_;
};

/// Log-mel spectrogram, T x 80.
struct MelSpectrogram {
  FrameMatrix frames;
  int sample_rate_hz = kDefaultSampleRate;

  int64_t frame_count() const { return frames.rows(); }
  bool operator==(const MelSpectrogram &) const = default;
};

/// Output of the hider; frame-aligned with the mel it came from.
struct HiddenRepresentation {
  FrameMatrix frames;

  int64_t frame_count() const { return frames.rows(); }
  bool operator==(const HiddenRepresentation &) const = default;
};

struct SpeakerLabel {
  int64_t class_index = 0;
  bool operator==(const SpeakerLabel &) const = default;
};

struct TrueClassIndicator {
  std::vector<double> onehot;
};

/// Finder output F(c|h).
struct ClassDistribution {
  std::vector<double> probs;
};

/// Dataset class prior p(c) with the histogram it was estimated from.
struct ClassPrior {
  std::vector<double> probs;
  std::vector<int64_t> counts;
};

struct SpeakerEmbedding {
  std::vector<float> values;  // kEmbeddingDim entries

  bool operator==(const SpeakerEmbedding &) const = default;
};

/// Throws Error(kRange) unless 0 <= label < num_classes.
TrueClassIndicator OneHot(SpeakerLabel label, int64_t num_classes);

}  // namespace hfcvp

#endif  // HFCVP_TYPES_H_
