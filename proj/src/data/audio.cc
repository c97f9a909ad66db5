// data/audio.cc

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

#include "hfcvp/audio.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <torch/torch.h>

#include "hfcvp/error.h"

namespace hfcvp {

void to_json(nlohmann::json &j, const FeatureConfig &c) {
  j = nlohmann::json{{"sample_rate_hz", c.sample_rate_hz}, {"n_fft", c.n_fft},
                     {"hop", c.hop}, {"window", c.window},
                     {"mel_bins", c.mel_bins}, {"fmin_hz", c.fmin_hz},
                     {"fmax_hz", c.fmax_hz}, {"log_floor", c.log_floor}};
}

void from_json(const nlohmann::json &j, FeatureConfig &c) {
  c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
  c.n_fft = j.value("n_fft", c.n_fft);
  c.hop = j.value("hop", c.hop);
  c.window = j.value("window", c.window);
  c.mel_bins = j.value("mel_bins", c.mel_bins);
  c.fmin_hz = j.value("fmin_hz", c.fmin_hz);
  c.fmax_hz = j.value("fmax_hz", c.fmax_hz);
  c.log_floor = j.value("log_floor", c.log_floor);
}

// ---------------------------------------------------------------------------
// WAV

namespace {

uint32_t U32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t U16(const unsigned char *p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

void PutU32(std::ostream &os, uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::ostream &os, uint16_t v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>(v >> 8));
}

}  // namespace

Waveform ReadWav(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    Fail(ErrorKind::kFormat, path.string() + ": not a RIFF/WAVE file");
  Waveform wav;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    const uint32_t size = U32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      Fail(ErrorKind::kFormat, path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) Fail(ErrorKind::kFormat, path.string() + ": short fmt chunk");
      const uint16_t format = U16(bytes.data() + body);
      const uint16_t channels = U16(bytes.data() + body + 2);
      const uint16_t bits = U16(bytes.data() + body + 14);
      if (format != 1 || channels != 1 || bits != 16)
        Fail(ErrorKind::kFormat, path.string() + ": only 16-bit PCM mono is supported");
      wav.sample_rate_hz = static_cast<int>(U32(bytes.data() + body + 4));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) Fail(ErrorKind::kFormat, path.string() + ": data before fmt");
      wav.samples.resize(size / 2);
      for (std::size_t i = 0; i < wav.samples.size(); ++i) {
        const auto s = static_cast<int16_t>(U16(bytes.data() + body + 2 * i));
        wav.samples[i] = static_cast<float>(s) / 32768.0f;
      }
      return wav;
    }
    pos = body + size + (size & 1);
  }
  Fail(ErrorKind::kFormat, path.string() + ": no data chunk");
}

void WriteWav(const std::filesystem::path &path, const Waveform &wav) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  const auto data_bytes = static_cast<uint32_t>(wav.samples.size() * 2);
  os.write("RIFF", 4);
  PutU32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  PutU32(os, 16);
  PutU16(os, 1);
  PutU16(os, 1);
  PutU32(os, static_cast<uint32_t>(wav.sample_rate_hz));
  PutU32(os, static_cast<uint32_t>(wav.sample_rate_hz * 2));
  PutU16(os, 2);
  PutU16(os, 16);
  os.write("data", 4);
  PutU32(os, data_bytes);
  for (float f : wav.samples) {
    const float c = std::clamp(f, -1.0f, 1.0f);
    PutU16(os, static_cast<uint16_t>(static_cast<int16_t>(std::lround(c * 32767.0f))));
  }
}

// ---------------------------------------------------------------------------
// Mel front-end

double HzToMel(double hz) {
  constexpr double f_sp = 200.0 / 3.0, min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double MelToHz(double mel) {
  constexpr double f_sp = 200.0 / 3.0, min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

std::vector<std::vector<double>> MelFilterbank(const FeatureConfig &cfg) {
  const int bins = cfg.n_fft / 2 + 1;
  const double lo = HzToMel(cfg.fmin_hz), hi = HzToMel(cfg.fmax_hz);
  std::vector<double> edges(static_cast<std::size_t>(cfg.mel_bins) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(cfg.mel_bins + 1));
  std::vector<std::vector<double>> fb(static_cast<std::size_t>(cfg.mel_bins),
                                      std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (int m = 0; m < cfg.mel_bins; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    const double norm = 2.0 / (right - left);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate_hz / cfg.n_fft;
      const double up = (f - left) / (centre - left);
      const double down = (right - f) / (right - centre);
      fb[m][k] = std::max(0.0, std::min(up, down)) * norm;
    }
  }
  return fb;
}

int64_t MelFrameCount(int64_t samples, const FeatureConfig &cfg) {
  const int64_t pad = cfg.n_fft / 2;
  return 1 + (samples + 2 * pad - cfg.n_fft) / cfg.hop;
}

MelSpectrogram ComputeMel(const Waveform &wav, const FeatureConfig &cfg) {
  if (wav.sample_rate_hz != cfg.sample_rate_hz)
    Fail(ErrorKind::kRate, "waveform is " + std::to_string(wav.sample_rate_hz) +
                               " Hz, features expect " +
                               std::to_string(cfg.sample_rate_hz) + " Hz");
  if (wav.samples.empty()) Fail(ErrorKind::kEmptyData, "empty waveform");
  if (cfg.window > cfg.n_fft || cfg.hop < 1)
    Fail(ErrorKind::kConfig, "window must not exceed n_fft; hop must be >= 1");

  const auto n = static_cast<int64_t>(wav.samples.size());
  const int64_t pad = cfg.n_fft / 2;
  auto signal = torch::from_blob(const_cast<float *>(wav.samples.data()), {1, 1, n},
                                 torch::kFloat32).to(torch::kFloat64);
  // Reflect padding needs more samples than the pad width.
  const bool reflect = n > pad;
  torch::nn::functional::PadFuncOptions pad_opts({pad, pad});
  if (reflect)
    pad_opts.mode(torch::kReflect);
  else
    pad_opts.mode(torch::kConstant);
  auto padded = torch::nn::functional::pad(signal, pad_opts);
  padded = padded.reshape({-1});

  auto window = torch::hann_window(cfg.window, /*periodic=*/true, torch::kFloat64);
  auto spec = torch::stft(padded, cfg.n_fft, cfg.hop, cfg.window, window,
                          /*normalized=*/false, /*onesided=*/true,
                          /*return_complex=*/true);
  auto magnitude = spec.abs();  // [bins, T]

  auto fb_rows = MelFilterbank(cfg);
  const int64_t bins = cfg.n_fft / 2 + 1;
  auto fb = torch::empty({cfg.mel_bins, bins}, torch::kFloat64);
  for (int m = 0; m < cfg.mel_bins; ++m)
    std::copy(fb_rows[m].begin(), fb_rows[m].end(), fb[m].data_ptr<double>());

  auto mel = torch::matmul(fb, magnitude).clamp_min(cfg.log_floor).log();
  mel = mel.transpose(0, 1).contiguous().to(torch::kFloat32);  // [T, mel_bins]

  const float *p = mel.template data_ptr<float>();
  MelSpectrogram out;
  out.sample_rate_hz = wav.sample_rate_hz;
  out.frames = FrameMatrix(mel.size(0), mel.size(1), std::vector<float>(p, p + mel.numel()));
  return out;
}

}  // namespace hfcvp
