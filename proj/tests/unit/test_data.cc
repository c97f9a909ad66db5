// tests/unit/test_data.cc

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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>

#include "hfcvp_doctest.h"

#include "hfcvp/audio.h"
#include "hfcvp/dataset.h"
#include "hfcvp/losses.h"
#include "test_util.h"

using namespace hfcvp;
namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

std::vector<SpeakerLabel> Labels(std::initializer_list<int64_t> xs) {
  std::vector<SpeakerLabel> out;
  for (auto x : xs) out.push_back({x});
  return out;
}

// Slaney mel of a frequency, written out independently.
double SlaneyMel(double hz) {
  if (hz < 1000.0) return 3.0 * hz / 200.0;
  return 15.0 + 27.0 * std::log(hz / 1000.0) / std::log(6.4);
}

}  // namespace

TEST_CASE("prior worked examples") {
  auto p = EstimatePrior(Labels({0, 0, 1, 2}), 3);
  CHECK(p.probs[0] == doctest::Approx(0.5));
  CHECK(p.probs[1] == doctest::Approx(0.25));
  CHECK(p.probs[2] == doctest::Approx(0.25));
  CHECK(p.counts == std::vector<int64_t>{2, 1, 1});
  auto u = EstimatePrior(Labels({3, 1, 0, 2, 2, 0, 1, 3}), 4);
  for (double v : u.probs) CHECK(v == doctest::Approx(0.25));

  std::vector<SpeakerLabel> many;
  for (int rep = 0; rep < 3; ++rep)
    for (int64_t c = 0; c < 904; ++c) many.push_back({c});
  auto big = EstimatePrior(many, 904);
  Rng rng(1);
  std::vector<double> f(904);
  double s = 0;
  for (auto &v : f) s += (v = rng.Uniform());
  for (auto &v : f) v /= s;
  double mean = 1.0 / 904, var = 0;
  for (double v : f) var += (v - mean) * (v - mean) / 904;
  CHECK(std::abs(LeakageMse({f}, big) - var) <= 1e-12);

  CHECK_THROWS_AS_KIND(EstimatePrior({}, 3), ErrorKind::kEmptyData);
  CHECK_THROWS_AS_KIND(EstimatePrior(Labels({0, 3}), 3), ErrorKind::kRange);

  // Literal softmax of counts: exp(2)/(exp(2)+2 exp(1)).
  auto lit = EstimatePrior(Labels({0, 0, 1, 2}), 3, PriorMode::kLiteralSoftmax);
  const double e2 = std::exp(2.0), e1 = std::exp(1.0);
  CHECK(lit.probs[0] == doctest::Approx(e2 / (e2 + 2 * e1)));
}

TEST_CASE("prior is a distribution and permutation-equivariant") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t c = rng.UniformInt(1, 12);
    std::vector<SpeakerLabel> labels;
    for (int i = 0; i < 40; ++i) labels.push_back({rng.UniformInt(0, c - 1)});
    auto p = EstimatePrior(labels, c);
    double s = 0;
    for (double v : p.probs) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
    std::vector<int64_t> perm(c);
    for (int64_t i = 0; i < c; ++i) perm[i] = (i * 5 + 3) % c;
    if (std::gcd(static_cast<int64_t>(5), c) != 1) continue;
    std::vector<SpeakerLabel> permuted;
    for (auto l : labels) permuted.push_back({perm[l.class_index]});
    auto q = EstimatePrior(permuted, c);
    for (int64_t i = 0; i < c; ++i) CHECK(q.probs[perm[i]] == p.probs[i]);
  }
}

TEST_CASE("mel front end") {
  FeatureConfig cfg;
  SUBCASE("frame count convention") {
    CHECK(MelFrameCount(11025, cfg) == 44);
    CHECK(MelFrameCount(0, cfg) == 1);
    CHECK(MelFrameCount(256, cfg) == 2);
    Waveform w{cfg.sample_rate_hz, std::vector<float>(11025, 0.0f)};
    CHECK(ComputeMel(w, cfg).frame_count() == 44);
  }
  SUBCASE("silence sits at the log floor") {
    Waveform w{cfg.sample_rate_hz, std::vector<float>(22050, 0.0f)};
    auto mel = ComputeMel(w, cfg);
    CHECK(mel.frames.cols() == kMelBins);
    for (float v : mel.frames.data()) CHECK(v == doctest::Approx(std::log(1e-5)).epsilon(1e-6));
  }
  SUBCASE("a 1 kHz tone peaks in the bin covering 1 kHz") {
    Waveform w{cfg.sample_rate_hz, {}};
    for (int i = 0; i < 22050; ++i)
      w.samples.push_back(0.5f * static_cast<float>(
                                     std::sin(2 * std::numbers::pi * 1000.0 * i / 22050.0)));
    auto mel = ComputeMel(w, cfg);
    // Filter m is centred on the (m+1)-th of 82 equally spaced mel points.
    const double pos = SlaneyMel(1000.0) / (SlaneyMel(8000.0) / 81.0) - 1.0;
    const int64_t lo = static_cast<int64_t>(std::floor(pos));
    for (int64_t t = 0; t < mel.frame_count(); ++t) {
      auto row = mel.frames.Row(t);
      const auto arg = std::distance(row.begin(), std::max_element(row.begin(), row.end()));
      CHECK((arg == lo || arg == lo + 1));
    }
  }
  SUBCASE("mel scale helpers invert each other") {
    for (double hz : {0.0, 440.0, 999.0, 1000.0, 4321.0, 8000.0}) {
      CHECK(HzToMel(hz) == doctest::Approx(SlaneyMel(hz)));
      CHECK(MelToHz(HzToMel(hz)) == doctest::Approx(hz));
    }
  }
  SUBCASE("rate mismatch is an error") {
    Waveform w{16000, std::vector<float>(1600, 0.0f)};
    CHECK_THROWS_AS_KIND(ComputeMel(w, cfg), ErrorKind::kRate);
  }
  SUBCASE("wav round trip") {
    TempDir dir;
    Waveform w{22050, {0.0f, 0.5f, -0.5f, 0.25f}};
    WriteWav(dir.path() / "a.wav", w);
    auto back = ReadWav(dir.path() / "a.wav");
    CHECK(back.sample_rate_hz == 22050);
    REQUIRE(back.samples.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(back.samples[i] == doctest::Approx(w.samples[i]).epsilon(1e-4));
  }
}

TEST_CASE("toy corpus bookkeeping and determinism") {
  TempDir a, b, c;
  ToyCorpusConfig cfg;
  auto m = GenerateToyCorpus(cfg, a.path());
  CHECK(m.records.size() == 800);
  CHECK(m.class_counts == std::vector<int64_t>(8, 100));
  CHECK(m.num_classes == 8);
  CHECK(Validate(m).ok());
  GenerateToyCorpus(cfg, b.path());
  CHECK(Slurp(a.path() / "manifest.json") == Slurp(b.path() / "manifest.json"));
  for (std::size_t i = 0; i < m.records.size(); i += 37)
    CHECK(Slurp(a.path() / m.records[i].features) == Slurp(b.path() / m.records[i].features));
  ToyCorpusConfig other = cfg;
  other.seed = 8;
  GenerateToyCorpus(other, c.path());
  CHECK(Slurp(a.path() / m.records[0].features) != Slurp(c.path() / m.records[0].features));

  auto loaded = LoadManifest(a.path());
  CHECK((loaded.records == m.records));
  ToyCorpusConfig bad = cfg;
  bad.num_classes = 1;
  CHECK_FALSE(Validate(bad).ok());
}

TEST_CASE("toy corpus is linearly separable on mean frames") {
  TempDir dir;
  ToyCorpusConfig cfg;
  GenerateToyCorpus(cfg, dir.path());
  auto ds = Dataset::Load(dir.path());
  // Multinomial logistic regression on mean-frame vectors, 80/20 split.
  const int64_t n = static_cast<int64_t>(ds.size());
  auto x = torch::zeros({n, kMelBins}, torch::kFloat64);
  auto y = torch::zeros({n}, torch::kInt64);
  for (int64_t i = 0; i < n; ++i) {
    const auto &f = ds.features(i).frames;
    auto t = torch::from_blob(const_cast<float *>(f.data().data()), {f.rows(), f.cols()})
                 .to(torch::kFloat64);
    x[i] = t.mean(0);
    y[i] = ds.record(i).label;
  }
  x = (x - x.mean(0)) / (x.std(0) + 1e-12);
  auto is_test = torch::arange(n) % 5 == 0;
  auto xtr = x.index({~is_test}), ytr = y.index({~is_test});
  auto xte = x.index({is_test}), yte = y.index({is_test});
  auto w = torch::zeros({kMelBins, 8}, torch::kFloat64).requires_grad_(true);
  auto b = torch::zeros({8}, torch::kFloat64).requires_grad_(true);
  torch::optim::LBFGS opt({w, b}, torch::optim::LBFGSOptions(1.0).max_iter(200));
  opt.step([&] {
    opt.zero_grad();
    auto loss = torch::nn::functional::cross_entropy(xtr.matmul(w) + b, ytr) +
                1e-3 * w.pow(2).sum();
    loss.backward();
    return loss;
  });
  const double acc =
      (xte.matmul(w) + b).argmax(1).eq(yte).to(torch::kFloat64).mean().item<double>();
  MESSAGE("linear probe accuracy " << acc);
  CHECK(acc >= 0.9);
}

TEST_CASE("epoch batches") {
  auto plan = EpochBatches(10, 4, 3, 1);
  REQUIRE(plan.size() == 3);
  CHECK(plan[0].size() == 4);
  CHECK(plan[1].size() == 4);
  CHECK(plan[2].size() == 2);
  CHECK((EpochBatches(10, 4, 3, 1) == plan));
  CHECK((EpochBatches(10, 4, 3, 2) != plan));
  std::vector<std::size_t> all;
  for (auto &bt : plan) all.insert(all.end(), bt.begin(), bt.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);
  CHECK_THROWS_AS_KIND(EpochBatches(10, 0, 3, 1), ErrorKind::kConfig);
}

TEST_CASE("batches cover the manifest and mask exactly the padding") {
  TempDir dir;
  ToyCorpusConfig cfg;
  cfg.num_classes = 3;
  cfg.utterances_per_class = 7;
  GenerateToyCorpus(cfg, dir.path());
  auto ds = Dataset::Load(dir.path());
  BatchStream stream(ds, 4, 11, 1);
  CHECK(stream.num_batches() == 6);
  std::map<int64_t, int> seen;
  Batch b;
  while (stream.Next(&b)) {
    for (std::size_t k = 0; k < b.indices.size(); ++k) {
      const auto &f = ds.features(b.indices[k]);
      const int64_t t = f.frame_count();
      seen[b.labels[k].item<int64_t>()]++;
      CHECK(b.mask[k].sum().item<double>() == static_cast<double>(t));
      if (t < b.mask.size(1)) {
        CHECK(b.mask[k].narrow(0, t, b.mask.size(1) - t).sum().item<double>() == 0.0);
        CHECK(b.features[k].narrow(0, t, b.mask.size(1) - t).abs().sum().item<double>() == 0.0);
      }
      CHECK(b.features[k][t - 1][5].item<float>() == f.frames(t - 1, 5));
      for (int64_t d = 0; d < kEmbeddingDim; d += 31)
        CHECK(b.embeddings[k][d].item<float>() == ds.embedding(b.indices[k]).values[d]);
    }
  }
  CHECK((seen == std::map<int64_t, int>{{0, 7}, {1, 7}, {2, 7}}));
}

TEST_CASE("embedding provisioning") {
  auto e1 = ToyEmbedding(1, "spk");
  auto e2 = ToyEmbedding(1, "spk");
  auto e3 = ToyEmbedding(2, "spk");
  CHECK(e1 == e2);
  CHECK_FALSE(e1 == e3);
  double norm = 0;
  for (float v : e1.values) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(e1.values.size() == static_cast<std::size_t>(kEmbeddingDim));

  TempDir dir;
  ToyCorpusConfig cfg;
  cfg.num_classes = 2;
  cfg.utterances_per_class = 3;
  auto m = GenerateToyCorpus(cfg, dir.path());
  auto avg = EmbeddingProvider::FromFiles(dir.path(), m, true);
  auto raw = EmbeddingProvider::FromFiles(dir.path(), m, false);
  // Averaging a speaker's utterance vectors by hand.
  std::vector<double> mean(kEmbeddingDim, 0.0);
  int count = 0;
  for (const auto &r : m.records)
    if (r.speaker_id == m.records[0].speaker_id) {
      auto e = raw.Get(r);
      for (int64_t d = 0; d < kEmbeddingDim; ++d) mean[d] += e.values[d];
      ++count;
    }
  auto got = avg.Get(m.records[0]);
  for (int64_t d = 0; d < kEmbeddingDim; ++d)
    CHECK(got.values[d] == doctest::Approx(mean[d] / count).epsilon(1e-5));
}
