// tests/unit/test_training.cc

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
#include <fstream>

#include "hfcvp_doctest.h"

#include "hfcvp/batch_losses.h"
#include "hfcvp/checkpoint.h"
#include "hfcvp/dataset.h"
#include "hfcvp/training.h"
#include "test_util.h"

using namespace hfcvp;
namespace fs = std::filesystem;

namespace {

NetworkConfig Tiny(int64_t classes) {
  NetworkConfig c = NetworkConfig::Toy(classes);
  c.hider.channels = 8;
  c.finder.gru_hidden = 16;
  c.finder.gru_layers = 2;
  c.combiner.d_model = 32;
  c.combiner.ffn_dim = 64;
  c.combiner.postnet_channels = 32;
  return c;
}

struct Corpus {
  TempDir dir;
  Dataset data;
  ClassPrior prior;
  Corpus() : data(Make(dir.path())) {
    prior = EstimatePrior(data.manifest().Labels(), data.manifest().num_classes);
  }
  static Dataset Make(const fs::path &root) {
    ToyCorpusConfig cfg;
    cfg.num_classes = 4;
    cfg.utterances_per_class = 6;
    cfg.min_frames = 16;
    cfg.max_frames = 28;
    GenerateToyCorpus(cfg, root);
    return Dataset::Load(root);
  }
};

uint64_t GeneratorChecksum(const TrainState &s) {
  return ParameterChecksum(*s.hider) ^ (ParameterChecksum(*s.combiner) * 31);
}

Batch RandomBatch(Rng &rng, int64_t classes) {
  const int64_t b = rng.UniformInt(1, 4), t = rng.UniformInt(4, 24);
  Batch out;
  out.features = torch::randn({b, t, kMelBins}) * 0.3;
  out.mask = torch::ones({b, t});
  out.mask[0].narrow(0, 0, 2).fill_(1.0);
  if (b > 1 && t > 6) out.mask[b - 1].narrow(0, t - 3, 3).fill_(0.0);
  out.labels = torch::randint(classes, {b}, torch::kInt64);
  out.embeddings = torch::randn({b, kEmbeddingDim});
  return out;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  c.lr_generator = 2e-4;
  c.lr_finder = 1e-4;
  c.decay_gamma = 0.999;
  c.decay_start_epoch = 100;
  CHECK(LrAt(1, c).first == 2e-4);
  CHECK(LrAt(100, c).first == 2e-4);
  CHECK(LrAt(100, c).second == 1e-4);
  CHECK(LrAt(101, c).first == doctest::Approx(0.999 * 2e-4).epsilon(1e-12));
  CHECK(LrAt(110, c).first == doctest::Approx(2e-4 * std::pow(0.999, 10)).epsilon(1e-12));
  CHECK(LrAt(110, c).second == doctest::Approx(1e-4 * std::pow(0.999, 10)).epsilon(1e-12));
  c.decay_gamma = 1.0;
  for (int64_t e : {0, 1, 100, 101, 5000}) CHECK(LrAt(e, c).first == 2e-4);
  CHECK_THROWS_AS_KIND(LrAt(-1, c), ErrorKind::kConfig);
}

TEST_CASE("gradient isolation over 50 random steps") {
  TrainConfig cfg;
  cfg.beta = 0.065;
  auto s = TrainState::Create(cfg, Tiny(4));
  auto prior = torch::full({4}, 0.25);
  Rng rng(9);
  torch::manual_seed(9);
  for (int step = 0; step < 50; ++step) {
    Batch b = RandomBatch(rng, 4);
    const uint64_t gen_before = GeneratorChecksum(s);
    const uint64_t fin_before = ParameterChecksum(*s.finder);
    TrainStepFinder(s, b);
    CHECK(GeneratorChecksum(s) == gen_before);
    CHECK(ParameterChecksum(*s.finder) != fin_before);

    const uint64_t fin_mid = ParameterChecksum(*s.finder);
    TrainStepGenerator(s, b, prior);
    CHECK(ParameterChecksum(*s.finder) == fin_mid);
    CHECK(GeneratorChecksum(s) != gen_before);
    // The finder is trainable again after the generator step.
    for (const auto &p : s.finder->parameters()) CHECK(p.requires_grad());
  }
}

TEST_CASE("finder step ignores beta") {
  Rng rng(4);
  torch::manual_seed(4);
  Batch b = RandomBatch(rng, 4);
  TrainConfig lo, hi;
  lo.beta = 0.0;
  hi.beta = 0.07;
  auto a = TrainState::Create(lo, Tiny(4));
  auto c = TrainState::Create(hi, Tiny(4));
  torch::manual_seed(1);
  const double la = TrainStepFinder(a, b);
  torch::manual_seed(1);
  const double lc = TrainStepFinder(c, b);
  CHECK(la == lc);
  CHECK(ParameterChecksum(*a.finder) == ParameterChecksum(*c.finder));
}

TEST_CASE("finder overfits a fixed batch") {
  Corpus corpus;
  TrainConfig cfg;
  cfg.lr_finder = 3e-3;
  auto s = TrainState::Create(cfg, Tiny(4));
  std::vector<std::size_t> idx{0, 6, 12, 18};
  Batch b = MakeBatch(corpus.data, idx);
  const double first = TrainStepFinder(s, b);
  double last = first;
  for (int i = 1; i < 200; ++i) last = TrainStepFinder(s, b);
  MESSAGE("finder loss " << first << " -> " << last);
  CHECK(last < 0.5 * first);
}

TEST_CASE("beta = 0 generator step equals a pure autoencoder step") {
  Rng rng(12);
  torch::manual_seed(12);
  Batch b = RandomBatch(rng, 4);
  TrainConfig cfg;
  cfg.beta = 0.0;
  auto a = TrainState::Create(cfg, Tiny(4));
  auto ref = TrainState::Create(cfg, Tiny(4));
  REQUIRE(GeneratorChecksum(a) == GeneratorChecksum(ref));

  torch::manual_seed(77);
  TrainStepGenerator(a, b, torch::full({4}, 0.25));

  torch::manual_seed(77);
  ref.hider->train();
  ref.combiner->train();
  ref.opt_generator->zero_grad();
  auto h = ref.hider(b.features, b.mask);
  auto [pre, post] = ref.combiner(h, b.embeddings, b.mask);
  auto loss = BatchReconstructionMse(pre, b.features, b.mask) +
              BatchReconstructionMse(post, b.features, b.mask);
  loss.backward();
  torch::nn::utils::clip_grad_norm_(ref.GeneratorParameters(), cfg.grad_clip_norm);
  ref.opt_generator->step();

  CHECK(GeneratorChecksum(a) == GeneratorChecksum(ref));
}

TEST_CASE("generator overfits a fixed batch at beta = 0") {
  Corpus corpus;
  TrainConfig cfg;
  cfg.beta = 0.0;
  cfg.lr_generator = 2e-3;
  auto net = Tiny(4);
  net.combiner.dropout = 0.0;
  auto s = TrainState::Create(cfg, net);
  std::vector<std::size_t> idx{1, 7};
  Batch b = MakeBatch(corpus.data, idx);
  auto prior = PriorTensor(corpus.prior);
  const double first = TrainStepGenerator(s, b, prior).combiner;
  double last = first;
  for (int i = 1; i < 500; ++i) last = TrainStepGenerator(s, b, prior).combiner;
  MESSAGE("reconstruction " << first << " -> " << last);
  CHECK(last < 0.01 * first);
}

TEST_CASE("generator losses decompose exactly") {
  Rng rng(5);
  torch::manual_seed(5);
  for (double beta : {0.0, 0.05, 0.065, 0.07}) {
    TrainConfig cfg;
    cfg.beta = beta;
    auto s = TrainState::Create(cfg, Tiny(4));
    for (int i = 0; i < 5; ++i) {
      auto g = TrainStepGenerator(s, RandomBatch(rng, 4), torch::full({4}, 0.25));
      CHECK(std::abs(g.total - (g.combiner + beta * g.leakage)) <= 1e-7);
      CHECK(g.leakage >= 0.0);
    }
  }
}

TEST_CASE("non-finite losses leave parameters untouched") {
  Rng rng(6);
  torch::manual_seed(6);
  TrainConfig cfg;
  auto s = TrainState::Create(cfg, Tiny(4));
  Batch b = RandomBatch(rng, 4);
  b.features[0][0][0] = std::numeric_limits<float>::quiet_NaN();
  const uint64_t g = GeneratorChecksum(s), f = ParameterChecksum(*s.finder);
  CHECK_THROWS_AS_KIND(TrainStepFinder(s, b), ErrorKind::kDivergence);
  CHECK_THROWS_AS_KIND(TrainStepGenerator(s, b, torch::full({4}, 0.25)), ErrorKind::kDivergence);
  CHECK(GeneratorChecksum(s) == g);
  CHECK(ParameterChecksum(*s.finder) == f);
  CHECK_THROWS_AS_KIND(TrainStepGenerator(s, RandomBatch(rng, 4), torch::full({3}, 1.0 / 3)),
                       ErrorKind::kDimension);
}

TEST_CASE("metrics log") {
  MetricsLog log;
  EpochMetrics m{1, 2e-4, 1e-4, 0.5, 0.01, 0.1, 0.5 + 0.065 * 0.01, std::nullopt};
  log.Append(m);
  m.epoch = 2;
  m.probe_acc = 0.375;
  log.Append(m);
  CHECK_THROWS_AS_KIND(log.Append(m), ErrorKind::kValidation);
  TempDir dir;
  log.WriteCsv(dir.path() / "m.csv");
  std::ifstream is(dir.path() / "m.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "epoch,lr_g,lr_f,loss_combiner,loss_leakage,loss_finder,probe_acc");
  auto back = MetricsLog::ReadCsv(dir.path() / "m.csv");
  REQUIRE(back.rows().size() == 2);
  CHECK_FALSE(back.rows()[0].probe_acc.has_value());
  CHECK(back.rows()[1].probe_acc.value() == 0.375);
  CHECK(back.rows()[1].loss_combiner == 0.5);
  CHECK((MetricsLog::FromJson(log.ToJson()).rows() == log.rows()));
  log.TruncateAfter(1);
  CHECK(log.rows().size() == 1);
}

TEST_CASE("runs are reproducible and resume bit-exactly") {
  Corpus corpus;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.checkpoint_every = 1;
  cfg.seed = 21;
  cfg.lr_generator = 1e-3;
  cfg.lr_finder = 1e-3;
  TempDir out1, out2, out3;
  auto r1 = RunTraining(cfg, Tiny(4), corpus.data, corpus.prior, {out1.path()});
  auto r2 = RunTraining(cfg, Tiny(4), corpus.data, corpus.prior, {out2.path()});
  REQUIRE(r1.metrics.rows().size() == 3);
  CHECK((r1.metrics.rows() == r2.metrics.rows()));
  for (const auto &row : r1.metrics.rows())
    CHECK(std::abs(row.loss_g - (row.loss_combiner + cfg.beta * row.loss_leakage)) <= 1e-7);

  for (const char *f : {"metrics.csv", "metrics.jsonl", "checkpoints/epoch_0002/manifest.json",
                        "checkpoints/last/hider.bin", "checkpoints/best/state.json"})
    CHECK(fs::exists(out1.path() / f));

  RunOptions resume{out3.path()};
  resume.resume_from = out1.path() / "checkpoints" / "epoch_0002";
  auto r3 = RunTraining(cfg, Tiny(4), corpus.data, corpus.prior, resume);
  REQUIRE(r3.metrics.rows().size() == 3);
  CHECK((r3.metrics.rows().back() == r1.metrics.rows().back()));

  auto a = LoadCheckpoint(r1.last_checkpoint);
  auto b = LoadCheckpoint(r3.last_checkpoint);
  CHECK(GeneratorChecksum(a) == GeneratorChecksum(b));
  CHECK(ParameterChecksum(*a.finder) == ParameterChecksum(*b.finder));
  CHECK(a.epoch == 3);
  CHECK(a.global_step == b.global_step);

  // Changing anything other than the epoch budget is refused on resume.
  TrainConfig other = cfg;
  other.beta = 0.05;
  CHECK_THROWS_AS_KIND(RunTraining(other, Tiny(4), corpus.data, corpus.prior, resume),
                       ErrorKind::kLoad);
}

TEST_CASE("checkpoint round trip and inference loading") {
  TrainConfig cfg;
  cfg.seed = 3;
  auto s = TrainState::Create(cfg, Tiny(4));
  Rng rng(3);
  for (int i = 0; i < 3; ++i) {
    auto b = RandomBatch(rng, 4);
    TrainStepFinder(s, b);
    TrainStepGenerator(s, b, torch::full({4}, 0.25));
  }
  s.epoch = 1;
  TempDir dir;
  const fs::path ck = dir.path() / "ck";
  SaveCheckpoint(s, ck);
  auto back = LoadCheckpoint(ck);
  CHECK(GeneratorChecksum(back) == GeneratorChecksum(s));
  CHECK(ParameterChecksum(*back.finder) == ParameterChecksum(*s.finder));
  CHECK(back.config == s.config);
  CHECK(back.networks == s.networks);
  CHECK(back.global_step == 3);

  fs::remove(ck / "finder.bin");
  auto inf = LoadInferenceModels(ck);
  CHECK(ParameterChecksum(*inf.hider) == ParameterChecksum(*s.hider));
  CHECK(ParameterChecksum(*inf.combiner) == ParameterChecksum(*s.combiner));
  CHECK_THROWS_AS_KIND(LoadCheckpoint(ck), ErrorKind::kLoad);
  CHECK_THROWS_AS_KIND(LoadInferenceModels(dir.path() / "nope"), ErrorKind::kLoad);

  Hider wrong(NetworkConfig::Toy(4).hider);
  CHECK_THROWS_AS_KIND(LoadModuleParameters(*wrong, ck / "hider.bin"), ErrorKind::kLoad);
}

TEST_CASE("hidden representations keep every frame") {
  Corpus corpus;
  auto s = TrainState::Create(TrainConfig{}, Tiny(4));
  auto hs = ComputeHidden(s.hider, corpus.data, 5);
  REQUIRE(hs.size() == corpus.data.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    CHECK(hs[i].rows() == corpus.data.features(i).frame_count());
    CHECK(hs[i].cols() == kHiddenDim);
  }
}
