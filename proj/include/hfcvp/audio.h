// hfcvp/audio.h

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

#ifndef HFCVP_AUDIO_H_
#define HFCVP_AUDIO_H_

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "hfcvp/types.h"

namespace hfcvp {

/// Mel front-end settings.  Defaults match the common 22.05 kHz neural
/// vocoder recipe so exported spectrograms can be vocoded directly.
struct FeatureConfig {
  int sample_rate_hz = kDefaultSampleRate;
  int n_fft = 1024;
  int hop = 256;
  int window = 1024;
  int mel_bins = static_cast<int>(kMelBins);
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double log_floor = 1e-5;

  bool operator==(const FeatureConfig &) const = default;
};

void to_json(nlohmann::json &j, const FeatureConfig &c);
void from_json(const nlohmann::json &j, FeatureConfig &c);

struct Waveform {
  int sample_rate_hz = kDefaultSampleRate;
  std::vector<float> samples;  // mono, [-1, 1]
};

/// 16-bit PCM mono RIFF/WAVE only.
Waveform ReadWav(const std::filesystem::path &path);
void WriteWav(const std::filesystem::path &path, const Waveform &wav);

// Slaney-style mel scale (linear below 1 kHz, logarithmic above).
double HzToMel(double hz);
double MelToHz(double mel);

/// Triangular, area-normalised filterbank [mel_bins, n_fft/2 + 1].
std::vector<std::vector<double>> MelFilterbank(const FeatureConfig &cfg);

/// Number of frames produced by ComputeMel for `samples` input samples:
/// the signal is reflect-padded by n_fft/2 on both sides (centred frames),
/// so T = 1 + floor(samples / hop).
int64_t MelFrameCount(int64_t samples, const FeatureConfig &cfg);

/// log(max(mel_filterbank * |STFT|, log_floor)), T x mel_bins.
/// Throws Error(kRate) if the waveform rate differs from cfg (no resampling).
MelSpectrogram ComputeMel(const Waveform &wav, const FeatureConfig &cfg);

}  // namespace hfcvp

#endif  // HFCVP_AUDIO_H_
