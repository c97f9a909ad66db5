// hfcvp/networks.h

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

#ifndef HFCVP_NETWORKS_H_
#define HFCVP_NETWORKS_H_

// The three trainable components.  All forward passes take time-major
// batches [B, T, F] plus a [B, T] mask (1 = real frame, 0 = padding) and are
// exact with respect to padding: values stored in padded frames never reach
// a valid output frame, so a padded batch reproduces the unbatched result.
//
//   Hider     x [B,T,80]          -> h [B,T,80]
//   Finder    h [B,T,80]          -> F(c|h) [B,C]   (softmax)
//   Combiner  h [B,T,80], e [B,192] -> (pre [B,T,80], post [B,T,80])

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "hfcvp/types.h"

namespace hfcvp {

struct HiderConfig {
  int64_t channels = 128;
  int64_t io_kernel = 7;
  int64_t num_blocks = 3;
  std::vector<int64_t> kernels = {3, 7, 11};
  std::vector<int64_t> dilations = {1, 3, 5};
  // Each residual unit is lrelu -> dilated conv -> lrelu -> conv (dilation 1).
  bool second_conv = true;
  double leaky_slope = 0.1;

  bool operator==(const HiderConfig &) const = default;
};

enum class FinderPooling { kLastState, kMean };

struct FinderConfig {
  int64_t num_classes = 904;
  int64_t conv_channels = 2;
  int64_t conv_kernel = 9;  // slides along the feature axis, unpadded
  int64_t gru_hidden = 200;
  int64_t gru_layers = 3;
  FinderPooling pooling = FinderPooling::kLastState;

  bool operator==(const FinderConfig &) const = default;
};

struct CombinerConfig {
  int64_t d_model = 384;
  int64_t layers = 4;
  int64_t heads = 2;
  int64_t ffn_dim = 1024;
  std::vector<int64_t> ffn_kernels = {9, 1};
  double dropout = 0.1;
  int64_t postnet_layers = 5;
  int64_t postnet_channels = 512;
  int64_t postnet_kernel = 5;
  double postnet_dropout = 0.5;

  bool operator==(const CombinerConfig &) const = default;
};

struct NetworkConfig {
  HiderConfig hider;
  FinderConfig finder;
  CombinerConfig combiner;

  /// Full-size architecture.
  static NetworkConfig Full(int64_t num_classes);
  /// Reduced widths for CPU-scale experiments on the toy corpus.
  static NetworkConfig Toy(int64_t num_classes);
  /// "full" or "toy".
  static NetworkConfig Preset(const std::string &name, int64_t num_classes);

  bool operator==(const NetworkConfig &) const = default;
};

void to_json(nlohmann::json &j, const NetworkConfig &c);
void from_json(const nlohmann::json &j, NetworkConfig &c);

/// 1-D convolution with weight normalisation: w = g * v / ||v|| (norm taken
/// per output channel).  "Same" zero padding.
class WnConv1dImpl : public torch::nn::Module {
 public:
  WnConv1dImpl(int64_t in, int64_t out, int64_t kernel, int64_t dilation = 1);
  torch::Tensor forward(const torch::Tensor &x);  // [B, in, T]

 private:
  int64_t dilation_;
  int64_t padding_;
  torch::Tensor v_, g_, bias_;
};
TORCH_MODULE(WnConv1d);

class HiderImpl : public torch::nn::Module {
 public:
  explicit HiderImpl(const HiderConfig &cfg);
  torch::Tensor forward(const torch::Tensor &x, const torch::Tensor &mask);

 private:
  HiderConfig cfg_;
  WnConv1d input_{nullptr}, output_{nullptr};
  // units_[block * kernels + k] = {dilated conv, optional dilation-1 conv}
  std::vector<std::pair<WnConv1d, WnConv1d>> units_;
};
TORCH_MODULE(Hider);

class FinderImpl : public torch::nn::Module {
 public:
  explicit FinderImpl(const FinderConfig &cfg);
  torch::Tensor forward(const torch::Tensor &h, const torch::Tensor &mask);
  /// Unnormalised scores; forward() is softmax(Logits()).
  torch::Tensor Logits(const torch::Tensor &h, const torch::Tensor &mask);

 private:
  FinderConfig cfg_;
  torch::nn::Conv1d conv_{nullptr};
  torch::nn::GRU gru_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Finder);

class EncoderLayerImpl : public torch::nn::Module {
 public:
  explicit EncoderLayerImpl(const CombinerConfig &cfg);
  torch::Tensor forward(const torch::Tensor &x, const torch::Tensor &mask);

 private:
  double dropout_;
  torch::nn::MultiheadAttention attention_{nullptr};
  torch::nn::Conv1d ffn_in_{nullptr}, ffn_out_{nullptr};
  torch::nn::LayerNorm norm1_{nullptr}, norm2_{nullptr};
};
TORCH_MODULE(EncoderLayer);

class CombinerImpl : public torch::nn::Module {
 public:
  explicit CombinerImpl(const CombinerConfig &cfg);
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor &h,
                                                  const torch::Tensor &embedding,
                                                  const torch::Tensor &mask);

 private:
  CombinerConfig cfg_;
  torch::nn::Linear hidden_proj_{nullptr}, speaker_proj_{nullptr}, out_proj_{nullptr};
  std::vector<EncoderLayer> layers_;
  std::vector<torch::nn::Conv1d> postnet_;
};
TORCH_MODULE(Combiner);

/// Sinusoidal position table [T, d].
torch::Tensor SinusoidalPositions(int64_t frames, int64_t d_model);

/// Exact number of trainable scalars.
int64_t CountParameters(const torch::nn::Module &module);

/// Order-sensitive checksum over every parameter's bytes (FNV-1a).
uint64_t ParameterChecksum(const torch::nn::Module &module);

// Checked entry points used by the pipeline; they validate inputs (finite,
// shapes) and throw Error(kValidation / kDimension) before running.
torch::Tensor HiderForward(Hider &hider, const torch::Tensor &x,
                           const torch::Tensor &mask);
torch::Tensor FinderForward(Finder &finder, const torch::Tensor &h,
                            const torch::Tensor &mask);
std::pair<torch::Tensor, torch::Tensor> CombinerForward(
    Combiner &combiner, const torch::Tensor &h, const torch::Tensor &embedding,
    const torch::Tensor &mask);

// Conversions between domain types and single-sequence tensors [1, T, F].
torch::Tensor ToTensor(const FrameMatrix &m);
torch::Tensor ToTensor(const SpeakerEmbedding &e);  // [1, 192]
FrameMatrix ToFrameMatrix(const torch::Tensor &t);  // [T, F] or [1, T, F]

}  // namespace hfcvp

#endif  // HFCVP_NETWORKS_H_
