// networks/networks.cc

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

#include "hfcvp/networks.h"

#include <cmath>
#include <cstring>

#include "hfcvp/error.h"

namespace hfcvp {

namespace F = torch::nn::functional;

NetworkConfig NetworkConfig::Full(int64_t num_classes) {
  NetworkConfig c;
  c.finder.num_classes = num_classes;
  return c;
}

NetworkConfig NetworkConfig::Toy(int64_t num_classes) {
  NetworkConfig c;
  c.hider.channels = 32;
  c.finder.num_classes = num_classes;
  c.finder.gru_hidden = 64;
  c.finder.gru_layers = 1;
  c.finder.pooling = FinderPooling::kMean;
  c.combiner.d_model = 64;
  c.combiner.layers = 2;
  c.combiner.ffn_dim = 128;
  c.combiner.postnet_layers = 3;
  c.combiner.postnet_channels = 64;
  c.combiner.postnet_dropout = 0.0;
  return c;
}

NetworkConfig NetworkConfig::Preset(const std::string &name, int64_t num_classes) {
  if (name == "full") return Full(num_classes);
  if (name == "toy") return Toy(num_classes);
  Fail(ErrorKind::kConfig, "unknown architecture preset '" + name + "' (full|toy)");
}

void to_json(nlohmann::json &j, const NetworkConfig &c) {
  j = nlohmann::json{
      {"hider",
       {{"channels", c.hider.channels},
        {"io_kernel", c.hider.io_kernel},
        {"num_blocks", c.hider.num_blocks},
        {"kernels", c.hider.kernels},
        {"dilations", c.hider.dilations},
        {"second_conv", c.hider.second_conv},
        {"leaky_slope", c.hider.leaky_slope}}},
      {"finder",
       {{"num_classes", c.finder.num_classes},
        {"conv_channels", c.finder.conv_channels},
        {"conv_kernel", c.finder.conv_kernel},
        {"gru_hidden", c.finder.gru_hidden},
        {"gru_layers", c.finder.gru_layers},
        {"pooling", c.finder.pooling == FinderPooling::kMean ? "mean" : "last"}}},
      {"combiner",
       {{"d_model", c.combiner.d_model},
        {"layers", c.combiner.layers},
        {"heads", c.combiner.heads},
        {"ffn_dim", c.combiner.ffn_dim},
        {"ffn_kernels", c.combiner.ffn_kernels},
        {"dropout", c.combiner.dropout},
        {"postnet_layers", c.combiner.postnet_layers},
        {"postnet_channels", c.combiner.postnet_channels},
        {"postnet_kernel", c.combiner.postnet_kernel},
        {"postnet_dropout", c.combiner.postnet_dropout}}},
  };
}

void from_json(const nlohmann::json &j, NetworkConfig &c) {
  try {
    const auto &h = j.at("hider");
    c.hider.channels = h.at("channels");
    c.hider.io_kernel = h.at("io_kernel");
    c.hider.num_blocks = h.at("num_blocks");
    c.hider.kernels = h.at("kernels").get<std::vector<int64_t>>();
    c.hider.dilations = h.at("dilations").get<std::vector<int64_t>>();
    c.hider.second_conv = h.at("second_conv");
    c.hider.leaky_slope = h.at("leaky_slope");
    const auto &f = j.at("finder");
    c.finder.num_classes = f.at("num_classes");
    c.finder.conv_channels = f.at("conv_channels");
    c.finder.conv_kernel = f.at("conv_kernel");
    c.finder.gru_hidden = f.at("gru_hidden");
    c.finder.gru_layers = f.at("gru_layers");
    c.finder.pooling = f.at("pooling").get<std::string>() == "mean"
                           ? FinderPooling::kMean
                           : FinderPooling::kLastState;
    const auto &m = j.at("combiner");
    c.combiner.d_model = m.at("d_model");
    c.combiner.layers = m.at("layers");
    c.combiner.heads = m.at("heads");
    c.combiner.ffn_dim = m.at("ffn_dim");
    c.combiner.ffn_kernels = m.at("ffn_kernels").get<std::vector<int64_t>>();
    c.combiner.dropout = m.at("dropout");
    c.combiner.postnet_layers = m.at("postnet_layers");
    c.combiner.postnet_channels = m.at("postnet_channels");
    c.combiner.postnet_kernel = m.at("postnet_kernel");
    c.combiner.postnet_dropout = m.at("postnet_dropout");
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kFormat, std::string("network config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

WnConv1dImpl::WnConv1dImpl(int64_t in, int64_t out, int64_t kernel,
                           int64_t dilation)
    : dilation_(dilation), padding_(dilation * (kernel - 1) / 2) {
  if (kernel % 2 == 0)
    Fail(ErrorKind::kConfig, "weight-normalised conv needs an odd kernel");
  auto v = torch::empty({out, in, kernel});
  torch::nn::init::kaiming_uniform_(v, std::sqrt(5.0));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel));
  v_ = register_parameter("v", v);
  g_ = register_parameter("g", v.norm(2, {1, 2}, true).detach().clone());
  bias_ = register_parameter("bias", torch::empty({out}).uniform_(-bound, bound));
}

torch::Tensor WnConv1dImpl::forward(const torch::Tensor &x) {
  auto w = g_ * v_ / v_.norm(2, {1, 2}, true);
  return torch::conv1d(x, w, bias_, /*stride=*/1, padding_, dilation_);
}

HiderImpl::HiderImpl(const HiderConfig &cfg) : cfg_(cfg) {
  if (cfg.kernels.size() != cfg.dilations.size() || cfg.kernels.empty())
    Fail(ErrorKind::kConfig, "hider kernels and dilations must pair up");
  input_ = register_module("input", WnConv1d(kMelBins, cfg.channels, cfg.io_kernel));
  for (int64_t b = 0; b < cfg.num_blocks; ++b) {
    for (std::size_t k = 0; k < cfg.kernels.size(); ++k) {
      const std::string name = "block" + std::to_string(b) + "_" + std::to_string(k);
      WnConv1d first = register_module(
          name + "_a",
          WnConv1d(cfg.channels, cfg.channels, cfg.kernels[k], cfg.dilations[k]));
      WnConv1d second{nullptr};
      if (cfg.second_conv)
        second = register_module(
            name + "_b", WnConv1d(cfg.channels, cfg.channels, cfg.kernels[k], 1));
      units_.emplace_back(first, second);
    }
  }
  output_ = register_module("output", WnConv1d(cfg.channels, kHiddenDim, cfg.io_kernel));
}

torch::Tensor HiderImpl::forward(const torch::Tensor &x, const torch::Tensor &mask) {
  const double slope = cfg_.leaky_slope;
  auto m = mask.to(x.dtype()).unsqueeze(1);  // [B, 1, T]
  auto act = [&](const torch::Tensor &t) {
    return F::leaky_relu(t, F::LeakyReLUFuncOptions().negative_slope(slope)) * m;
  };
  auto y = input_(x.transpose(1, 2) * m);
  for (auto &[first, second] : units_) {
    auto r = first(act(y));
    if (second) r = second(act(r));
    y = y + r;
  }
  y = output_(act(y));
  return y.transpose(1, 2) * mask.to(x.dtype()).unsqueeze(2);
}

FinderImpl::FinderImpl(const FinderConfig &cfg) : cfg_(cfg) {
  if (cfg.conv_kernel > kHiddenDim || cfg.num_classes < 1)
    Fail(ErrorKind::kConfig, "bad finder configuration");
  conv_ = register_module(
      "conv", torch::nn::Conv1d(torch::nn::Conv1dOptions(1, cfg.conv_channels,
                                                         cfg.conv_kernel)));
  const int64_t gru_in = cfg.conv_channels * (kHiddenDim - cfg.conv_kernel + 1);
  gru_ = register_module(
      "gru", torch::nn::GRU(torch::nn::GRUOptions(gru_in, cfg.gru_hidden)
                                .num_layers(cfg.gru_layers)
                                .batch_first(true)));
  head_ = register_module("head", torch::nn::Linear(cfg.gru_hidden, cfg.num_classes));
}

torch::Tensor FinderImpl::Logits(const torch::Tensor &h, const torch::Tensor &mask) {
  const int64_t batch = h.size(0), frames = h.size(1);
  auto z = conv_(h.reshape({batch * frames, 1, kHiddenDim}));
  z = z.reshape({batch, frames, -1});
  auto lengths = mask.sum(1).to(torch::kInt64).cpu();
  auto packed = torch::nn::utils::rnn::pack_padded_sequence(
      z, lengths, /*batch_first=*/true, /*enforce_sorted=*/false);
  auto [out, last] = gru_->forward_with_packed_input(packed);
  torch::Tensor pooled;
  if (cfg_.pooling == FinderPooling::kLastState) {
    pooled = last[cfg_.gru_layers - 1];
  } else {
    auto [padded, lens] = torch::nn::utils::rnn::pad_packed_sequence(
        out, /*batch_first=*/true, /*padding_value=*/0.0, frames);
    pooled = padded.sum(1) / lens.to(padded.dtype()).unsqueeze(1);
  }
  return head_(pooled);
}

torch::Tensor FinderImpl::forward(const torch::Tensor &h, const torch::Tensor &mask) {
  return torch::softmax(Logits(h, mask), 1);
}

EncoderLayerImpl::EncoderLayerImpl(const CombinerConfig &cfg) : dropout_(cfg.dropout) {
  if (cfg.ffn_kernels.size() != 2 || cfg.ffn_kernels[0] % 2 == 0 ||
      cfg.ffn_kernels[1] % 2 == 0)
    Fail(ErrorKind::kConfig, "ffn_kernels must be two odd sizes");
  attention_ = register_module(
      "attention", torch::nn::MultiheadAttention(
                       torch::nn::MultiheadAttentionOptions(cfg.d_model, cfg.heads)));
  ffn_in_ = register_module(
      "ffn_in", torch::nn::Conv1d(
                    torch::nn::Conv1dOptions(cfg.d_model, cfg.ffn_dim, cfg.ffn_kernels[0])
                        .padding(cfg.ffn_kernels[0] / 2)));
  ffn_out_ = register_module(
      "ffn_out", torch::nn::Conv1d(
                     torch::nn::Conv1dOptions(cfg.ffn_dim, cfg.d_model, cfg.ffn_kernels[1])
                         .padding(cfg.ffn_kernels[1] / 2)));
  norm1_ = register_module(
      "norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.d_model})));
  norm2_ = register_module(
      "norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.d_model})));
}

torch::Tensor EncoderLayerImpl::forward(const torch::Tensor &x, const torch::Tensor &mask) {
  auto m3 = mask.to(x.dtype()).unsqueeze(2);   // [B, T, 1]
  auto mc = mask.to(x.dtype()).unsqueeze(1);   // [B, 1, T]
  auto seq = x.transpose(0, 1);                // attention wants [T, B, d]
  auto attended = std::get<0>(attention_->forward(seq, seq, seq,
                                                  /*key_padding_mask=*/mask == 0,
                                                  /*need_weights=*/false));
  auto y = norm1_(x + torch::dropout(attended.transpose(0, 1), dropout_, is_training())) * m3;
  auto f = ffn_in_(y.transpose(1, 2) * mc);
  f = ffn_out_(torch::relu(f) * mc).transpose(1, 2);
  return norm2_(y + torch::dropout(f, dropout_, is_training())) * m3;
}

CombinerImpl::CombinerImpl(const CombinerConfig &cfg) : cfg_(cfg) {
  if (cfg.d_model % 2 != 0 || cfg.postnet_layers < 1 || cfg.postnet_kernel % 2 == 0)
    Fail(ErrorKind::kConfig, "bad combiner configuration");
  hidden_proj_ = register_module("hidden_proj", torch::nn::Linear(kHiddenDim, cfg.d_model));
  speaker_proj_ = register_module("speaker_proj", torch::nn::Linear(kEmbeddingDim, cfg.d_model));
  for (int64_t i = 0; i < cfg.layers; ++i)
    layers_.push_back(register_module("layer" + std::to_string(i), EncoderLayer(cfg)));
  out_proj_ = register_module("out_proj", torch::nn::Linear(cfg.d_model, kMelBins));
  for (int64_t i = 0; i < cfg.postnet_layers; ++i) {
    const int64_t in = i == 0 ? kMelBins : cfg.postnet_channels;
    const int64_t out = i + 1 == cfg.postnet_layers ? kMelBins : cfg.postnet_channels;
    postnet_.push_back(register_module(
        "postnet" + std::to_string(i),
        torch::nn::Conv1d(torch::nn::Conv1dOptions(in, out, cfg.postnet_kernel)
                              .padding(cfg.postnet_kernel / 2))));
  }
}

std::pair<torch::Tensor, torch::Tensor> CombinerImpl::forward(
    const torch::Tensor &h, const torch::Tensor &embedding, const torch::Tensor &mask) {
  auto m3 = mask.to(h.dtype()).unsqueeze(2);
  auto mc = mask.to(h.dtype()).unsqueeze(1);
  auto positions = SinusoidalPositions(h.size(1), cfg_.d_model).to(h.dtype());
  auto y = (hidden_proj_(h) + speaker_proj_(embedding).unsqueeze(1) +
            positions.unsqueeze(0)) * m3;
  for (auto &layer : layers_) y = layer(y, mask);
  auto pre = out_proj_(y) * m3;
  auto z = pre.transpose(1, 2);
  for (std::size_t i = 0; i < postnet_.size(); ++i) {
    z = postnet_[i](z * mc);
    if (i + 1 < postnet_.size()) z = torch::tanh(z);
    z = torch::dropout(z, cfg_.postnet_dropout, is_training());
  }
  auto post = (pre + z.transpose(1, 2)) * m3;
  return {pre, post};
}

torch::Tensor SinusoidalPositions(int64_t frames, int64_t d_model) {
  auto pos = torch::arange(frames, torch::kFloat64).unsqueeze(1);
  auto idx = torch::arange(0, d_model, 2, torch::kFloat64);
  auto angle = pos / torch::pow(10000.0, idx / static_cast<double>(d_model));
  auto table = torch::zeros({frames, d_model}, torch::kFloat64);
  using torch::indexing::None;
  using torch::indexing::Slice;
  table.index_put_({Slice(), Slice(0, None, 2)}, torch::sin(angle));
  table.index_put_({Slice(), Slice(1, None, 2)}, torch::cos(angle));
  return table.to(torch::kFloat32);
}

// ---------------------------------------------------------------------------

int64_t CountParameters(const torch::nn::Module &module) {
  int64_t n = 0;
  for (const auto &p : module.parameters())
    if (p.requires_grad()) n += p.numel();
  return n;
}

uint64_t ParameterChecksum(const torch::nn::Module &module) {
  uint64_t hash = 1469598103934665603ULL;
  for (const auto &item : module.named_parameters()) {
    auto t = item.value().detach().contiguous().cpu();
    const auto *bytes = static_cast<const unsigned char *>(t.data_ptr());
    const std::size_t n = static_cast<std::size_t>(t.numel()) * t.element_size();
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

namespace {

void CheckBatch(const torch::Tensor &x, const torch::Tensor &mask, int64_t width,
                const char *what) {
  if (x.dim() != 3 || x.size(2) != width)
    Fail(ErrorKind::kDimension, std::string(what) + ": input must be [B, T, " +
                                    std::to_string(width) + "]");
  if (mask.dim() != 2 || mask.size(0) != x.size(0) || mask.size(1) != x.size(1))
    Fail(ErrorKind::kDimension, std::string(what) + ": mask must be [B, T]");
  if (x.size(0) < 1 || x.size(1) < 1)
    Fail(ErrorKind::kValidation, std::string(what) + ": empty batch");
  if (!torch::isfinite(x).all().item<bool>())
    Fail(ErrorKind::kValidation, std::string(what) + ": non-finite entry in input");
  auto lengths = mask.to(torch::kInt64).sum(1);
  auto prefix = torch::arange(x.size(1), torch::kInt64).unsqueeze(0) < lengths.unsqueeze(1);
  if (!torch::equal(prefix, mask != 0))
    Fail(ErrorKind::kValidation, std::string(what) + ": mask must be a 0/1 prefix per sequence");
  if (lengths.min().item<int64_t>() < 1)
    Fail(ErrorKind::kValidation, std::string(what) + ": sequence with no valid frame");
}

}  // namespace

torch::Tensor HiderForward(Hider &hider, const torch::Tensor &x,
                           const torch::Tensor &mask) {
  CheckBatch(x, mask, kMelBins, "hider");
  return hider(x, mask);
}

torch::Tensor FinderForward(Finder &finder, const torch::Tensor &h,
                            const torch::Tensor &mask) {
  CheckBatch(h, mask, kHiddenDim, "finder");
  return finder(h, mask);
}

std::pair<torch::Tensor, torch::Tensor> CombinerForward(
    Combiner &combiner, const torch::Tensor &h, const torch::Tensor &embedding,
    const torch::Tensor &mask) {
  CheckBatch(h, mask, kHiddenDim, "combiner");
  if (embedding.dim() != 2 || embedding.size(0) != h.size(0) ||
      embedding.size(1) != kEmbeddingDim)
    Fail(ErrorKind::kDimension, "combiner: embedding must be [B, " +
                                    std::to_string(kEmbeddingDim) + "]");
  if (!torch::isfinite(embedding).all().item<bool>())
    Fail(ErrorKind::kValidation, "combiner: non-finite embedding");
  return combiner(h, embedding, mask);
}

torch::Tensor ToTensor(const FrameMatrix &m) {
  auto t = torch::empty({1, m.rows(), m.cols()}, torch::kFloat32);
  std::memcpy(t.data_ptr<float>(), m.data().data(), m.data().size() * sizeof(float));
  return t;
}

torch::Tensor ToTensor(const SpeakerEmbedding &e) {
  auto t = torch::empty({1, static_cast<int64_t>(e.values.size())}, torch::kFloat32);
  std::memcpy(t.data_ptr<float>(), e.values.data(), e.values.size() * sizeof(float));
  return t;
}

FrameMatrix ToFrameMatrix(const torch::Tensor &t) {
  auto m = t.dim() == 3 ? t.squeeze(0) : t;
  if (m.dim() != 2) Fail(ErrorKind::kDimension, "expected a [T, F] tensor");
  m = m.detach().to(torch::kFloat32).contiguous().cpu();
  const float *p = m.data_ptr<float>();
  return FrameMatrix(m.size(0), m.size(1), std::vector<float>(p, p + m.numel()));
}

}  // namespace hfcvp
