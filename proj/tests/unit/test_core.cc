// tests/unit/test_core.cc

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

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "hfcvp_doctest.h"

#include "hfcvp/config.h"
#include "hfcvp/error.h"
#include "hfcvp/rng.h"
#include "hfcvp/serialize.h"
#include "hfcvp/types.h"
#include "hfcvp/validate.h"
#include "test_util.h"

using namespace hfcvp;

TEST_CASE("onehot places a single one") {
  auto v = OneHot(SpeakerLabel{2}, 4).onehot;
  CHECK(v == std::vector<double>{0, 0, 1, 0});
  CHECK(OneHot(SpeakerLabel{0}, 1).onehot == std::vector<double>{1});
  CHECK_THROWS_AS_KIND(OneHot(SpeakerLabel{5}, 4), ErrorKind::kRange);
  CHECK_THROWS_AS_KIND(OneHot(SpeakerLabel{-1}, 4), ErrorKind::kRange);
  for (int c = 1; c < 20; ++c)
    for (int k = 0; k < c; ++k) {
      auto o = OneHot(SpeakerLabel{k}, c).onehot;
      double s = 0;
      int nz = 0;
      for (double x : o) {
        s += x;
        nz += x != 0.0;
      }
      CHECK(s == 1.0);
      CHECK(nz == 1);
    }
}

TEST_CASE("validation reports violated invariants") {
  CHECK(Validate(ClassDistribution{{0.5, 0.5}}).ok());
  auto r = Validate(ClassDistribution{{0.7, 0.7}});
  CHECK_FALSE(r.ok());
  CHECK(r.Mentions("sum != 1"));
  CHECK(Validate(ClassDistribution{{-0.1, 1.1}}).Mentions("negative"));

  FrameMatrix m(3, kMelBins);
  m(1, 7) = std::numeric_limits<float>::quiet_NaN();
  auto mr = Validate(MelSpectrogram{m, kDefaultSampleRate});
  CHECK(mr.Mentions("non-finite entry"));
  CHECK_FALSE(Validate(MelSpectrogram{FrameMatrix(0, kMelBins), kDefaultSampleRate}).ok());
  CHECK_FALSE(Validate(MelSpectrogram{FrameMatrix(4, 79), kDefaultSampleRate}).ok());
  CHECK(Validate(MelSpectrogram{FrameMatrix(4, kMelBins), kDefaultSampleRate}).ok());

  CHECK(Validate(HiddenRepresentation{FrameMatrix(5, kHiddenDim)}, 5).ok());
  CHECK_FALSE(Validate(HiddenRepresentation{FrameMatrix(5, kHiddenDim)}, 6).ok());

  CHECK(Validate(SpeakerLabel{3}, 4).ok());
  CHECK_FALSE(Validate(SpeakerLabel{4}, 4).ok());

  CHECK(Validate(TrueClassIndicator{{0, 1, 0}}).ok());
  CHECK_FALSE(Validate(TrueClassIndicator{{0.5, 0.5}}).ok());
  CHECK_FALSE(Validate(TrueClassIndicator{{1, 1}}).ok());

  CHECK(Validate(ClassPrior{{0.25, 0.75}, {1, 3}}).ok());
  CHECK_FALSE(Validate(ClassPrior{{0.25, 0.75 + 1e-8}, {1, 3}}).ok());

  SpeakerEmbedding e;
  e.values.assign(kEmbeddingDim, 0.1f);
  CHECK(Validate(e).ok());
  e.values.pop_back();
  CHECK_FALSE(Validate(e).ok());
  e.values.push_back(std::numeric_limits<float>::infinity());
  CHECK(Validate(e).Mentions("non-finite"));

  // Every violation is listed, not just the first.
  ClassDistribution bad{{-0.5, std::nan(""), 0.2}};
  CHECK(Validate(bad).violations.size() >= 2);
}

TEST_CASE("train config ranges") {
  TrainConfig c;
  CHECK(Validate(c).ok());
  c.beta = -0.1;
  c.lr_finder = 0.0;
  c.decay_gamma = 1.5;
  c.finder_steps_per_generator_step = 0;
  auto r = Validate(c);
  CHECK(r.violations.size() == 4);
  c = TrainConfig{};
  c.decay_gamma = 1.0;
  CHECK(Validate(c).ok());
}

TEST_CASE("train config JSON round trip and unknown keys") {
  TrainConfig c;
  c.beta = 0.05;
  c.loss_regime = LossRegime::kKl;
  c.seed = 99;
  nlohmann::json j = c;
  CHECK(j.get<TrainConfig>() == c);
  j["bogus"] = 1;
  CHECK_THROWS_AS_KIND(j.get<TrainConfig>(), ErrorKind::kConfig);
  nlohmann::json partial = {{"beta", 0.06}};
  TrainConfig p = partial.get<TrainConfig>();
  CHECK(p.beta == 0.06);
  CHECK(p.lr_generator == TrainConfig{}.lr_generator);
  CHECK(ParseLossRegime("kl") == LossRegime::kKl);
  CHECK_THROWS_AS_KIND(ParseLossRegime("l1"), ErrorKind::kConfig);
}

TEST_CASE("binary container layout is little-endian with the magic header") {
  std::ostringstream os;
  const std::vector<int64_t> dims{2, 3};
  const std::vector<float> data{1, 2, 3, 4, 5, -0.5f};
  WriteTensorRecord(os, dims, data);
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 6 + 8 + 16 + 24);
  CHECK(bytes.substr(0, 6) == "HFCVP1");
  auto u64 = [&](std::size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
    return v;
  };
  CHECK(u64(6) == 2);
  CHECK(u64(14) == 2);
  CHECK(u64(22) == 3);
  // -0.5f is 0xBF000000.
  CHECK(static_cast<unsigned char>(bytes[bytes.size() - 1]) == 0xBF);
  CHECK(static_cast<unsigned char>(bytes[bytes.size() - 4]) == 0x00);

  std::istringstream is(bytes);
  auto rec = ReadTensorRecord(is);
  CHECK(rec.dims == dims);
  CHECK(rec.data == data);
}

TEST_CASE("serialization round trips bit-exactly") {
  TempDir dir;
  Rng rng(5);
  FrameMatrix m(17, kMelBins);
  for (float &v : m.mutable_data()) v = static_cast<float>(rng.Normal() * 1e3);
  m(0, 0) = -0.0f;
  m(1, 1) = std::numeric_limits<float>::denorm_min();
  SaveMatrix(dir.path() / "m.bin", m);
  FrameMatrix back = LoadMatrix(dir.path() / "m.bin");
  REQUIRE(back.rows() == m.rows());
  CHECK(std::memcmp(back.data().data(), m.data().data(), m.data().size() * 4) == 0);

  SpeakerEmbedding e;
  for (int i = 0; i < kEmbeddingDim; ++i) e.values.push_back(static_cast<float>(rng.Normal()));
  SaveEmbedding(dir.path() / "e.bin", e);
  CHECK(LoadEmbedding(dir.path() / "e.bin") == e);

  std::vector<TensorRecord> recs{{{3}, {1, 2, 3}}, {{1, 1, 2}, {4, 5}}, {{0}, {}}};
  SaveTensorRecords(dir.path() / "r.bin", recs);
  CHECK((LoadTensorRecords(dir.path() / "r.bin") == recs));

  ClassPrior p{{0.5, 0.25, 0.25}, {2, 1, 1}};
  nlohmann::json pj = p;
  auto p2 = pj.get<ClassPrior>();
  CHECK(p2.probs == p.probs);
  CHECK(p2.counts == p.counts);
  ClassDistribution d{{0.1, 0.9}};
  nlohmann::json dj = d;
  CHECK(dj.get<ClassDistribution>().probs == d.probs);
}

TEST_CASE("malformed containers are rejected") {
  TempDir dir;
  {
    std::ofstream os(dir.path() / "bad.bin", std::ios::binary);
    os << "HFCVP2" << std::string(8, '\0');
  }
  CHECK_THROWS_AS_KIND(LoadMatrix(dir.path() / "bad.bin"), ErrorKind::kFormat);
  {
    std::ostringstream os;
    WriteTensorRecord(os, std::vector<int64_t>{4, 80}, std::vector<float>(320, 1.0f));
    std::string b = os.str();
    std::ofstream f(dir.path() / "trunc.bin", std::ios::binary);
    f << b.substr(0, b.size() - 3);
  }
  CHECK_THROWS_AS_KIND(LoadMatrix(dir.path() / "trunc.bin"), ErrorKind::kFormat);
  SaveEmbedding(dir.path() / "vec.bin", SpeakerEmbedding{std::vector<float>(kEmbeddingDim, 1)});
  CHECK_THROWS_AS_KIND(LoadMatrix(dir.path() / "vec.bin"), ErrorKind::kFormat);
  CHECK_THROWS_AS_KIND(LoadMatrix(dir.path() / "missing.bin"), ErrorKind::kIo);
}

TEST_CASE("rng streams are reproducible and roughly normal") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t x = a.NextU64();
    CHECK(x == b.NextU64());
    differs |= x != c.NextU64();
  }
  CHECK(differs);
  Rng n(1);
  double s = 0, s2 = 0;
  const int kN = 200000;
  for (int i = 0; i < kN; ++i) {
    const double v = n.Normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / kN) < 0.01);
  CHECK(std::abs(s2 / kN - 1.0) < 0.02);
  Rng u(2);
  for (int i = 0; i < 1000; ++i) {
    const auto k = u.UniformInt(3, 5);
    CHECK(k >= 3);
    CHECK(k <= 5);
  }
}
