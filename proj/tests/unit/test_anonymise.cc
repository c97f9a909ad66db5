// tests/unit/test_anonymise.cc

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
#include <iterator>
#include <map>
#include <set>

#include "hfcvp_doctest.h"

#include "hfcvp/anonymise.h"
#include "hfcvp/checkpoint.h"
#include "hfcvp/serialize.h"
#include "hfcvp/training.h"
#include "test_util.h"

using namespace hfcvp;
namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

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

// A toy corpus plus a briefly trained checkpoint, shared by the cases below.
struct Fixture {
  TempDir dir;
  fs::path data, ckpt;
  Fixture() {
    data = dir.path() / "data";
    ckpt = dir.path() / "ckpt";
    fs::create_directories(data);
    ToyCorpusConfig cfg;
    cfg.utterances_per_class = 100;
    GenerateToyCorpus(cfg, data);
    auto ds = Dataset::Load(data);
    TrainConfig tc;
    tc.seed = 5;
    tc.lr_generator = 1e-3;
    auto s = TrainState::Create(tc, Tiny(8));
    auto prior = PriorTensor(EstimatePrior(ds.manifest().Labels(), 8));
    BatchStream stream(ds, 16, 5, 1);
    Batch b;
    for (int i = 0; i < 20 && stream.Next(&b); ++i) {
      TrainStepFinder(s, b);
      TrainStepGenerator(s, b, prior);
    }
    s.epoch = 1;
    SaveCheckpoint(s, ckpt);
  }
};

Fixture &Shared() {
  static Fixture f;
  return f;
}

TargetPolicy ToyPolicy(TargetMode mode, int64_t n = 16, uint64_t seed = 3) {
  TargetPolicy p;
  p.mode = mode;
  p.pool = ToyPool(n, seed);
  p.seed = seed;
  return p;
}

// Upper 1% point of chi-square with k degrees of freedom (Wilson-Hilferty).
double ChiSquare99(double k) {
  const double z = 2.3263478740408408;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace

TEST_CASE("policy names and validation") {
  for (auto m : {TargetMode::kUtteranceRandom, TargetMode::kFixedTarget,
                 TargetMode::kSpeakerConsistentRandom})
    CHECK(ParseTargetMode(TargetModeName(m)) == m);
  CHECK_THROWS_AS_KIND(ParseTargetMode("most-distant"), ErrorKind::kConfig);
  TargetPolicy empty;
  CHECK(Validate(empty).Mentions("empty"));
  CHECK_THROWS_AS_KIND(SelectTargetIndex(empty, "u", "s"), ErrorKind::kConfig);
  auto fixed = ToyPolicy(TargetMode::kFixedTarget);
  CHECK(SelectTarget(fixed, "a", "b").id == "ext0000");
  fixed.fixed_id = "ext0007";
  CHECK(SelectTarget(fixed, "a", "b").id == "ext0007");
  CHECK(SelectTarget(fixed, "zzz", "yyy").id == "ext0007");
  fixed.fixed_id = "nobody";
  CHECK_FALSE(Validate(fixed).ok());
  CHECK_THROWS_AS_KIND(SelectTargetIndex(fixed, "a", "b"), ErrorKind::kConfig);
}

TEST_CASE("target selection is deterministic and keyed as documented") {
  auto utt = ToyPolicy(TargetMode::kUtteranceRandom);
  CHECK(SelectTargetIndex(utt, "u1", "s1") == SelectTargetIndex(utt, "u1", "s1"));
  CHECK(SelectTargetIndex(utt, "u1", "s1") == SelectTargetIndex(utt, "u1", "other"));
  std::set<std::size_t> picks;
  for (int i = 0; i < 50; ++i) picks.insert(SelectTargetIndex(utt, "u" + std::to_string(i), "s"));
  CHECK(picks.size() > 1);

  auto spk = ToyPolicy(TargetMode::kSpeakerConsistentRandom);
  for (int i = 0; i < 20; ++i)
    CHECK(SelectTargetIndex(spk, "u" + std::to_string(i), "alice") ==
          SelectTargetIndex(spk, "v", "alice"));
  std::set<std::size_t> per_speaker;
  for (int i = 0; i < 30; ++i) per_speaker.insert(SelectTargetIndex(spk, "u", "s" + std::to_string(i)));
  CHECK(per_speaker.size() > 1);

  auto reseeded = utt;
  reseeded.seed = 4;
  int same = 0;
  for (int i = 0; i < 100; ++i)
    same += SelectTargetIndex(utt, std::to_string(i), "") ==
            SelectTargetIndex(reseeded, std::to_string(i), "");
  CHECK(same < 30);
}

TEST_CASE("utterance-random choice is uniform over the pool") {
  const int64_t n = 50;
  auto policy = ToyPolicy(TargetMode::kUtteranceRandom, n, 11);
  std::vector<int> counts(n, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    ++counts[SelectTargetIndex(policy, "utt_" + std::to_string(i), "spk")];
  const double expected = static_cast<double>(draws) / n;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  MESSAGE("chi2 " << chi2 << " critical " << ChiSquare99(n - 1));
  CHECK(chi2 < ChiSquare99(n - 1));
}

TEST_CASE("pools") {
  auto pool = ToyPool(3, 9);
  REQUIRE(pool.size() == 3);
  CHECK(pool[2].id == "ext0002");
  double norm = 0;
  for (float v : pool[0].embedding.values) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(PoolFromSpec("toy:3", 9)[1].embedding == pool[1].embedding);
  CHECK_THROWS_AS_KIND(PoolFromSpec("toy:abc", 9), ErrorKind::kConfig);
  CHECK_THROWS_AS_KIND(ToyPool(0, 9), ErrorKind::kConfig);

  TempDir dir;
  SaveEmbedding(dir.path() / "zeta.bin", pool[0].embedding);
  SaveEmbedding(dir.path() / "alpha.bin", pool[1].embedding);
  { std::ofstream(dir.path() / "notes.txt") << "ignored"; }
  auto loaded = LoadPool(dir.path());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "alpha");
  CHECK(loaded[1].embedding == pool[0].embedding);
  TempDir empty;
  CHECK_THROWS_AS_KIND(LoadPool(empty.path()), ErrorKind::kConfig);
}

TEST_CASE("single-utterance anonymisation") {
  auto &f = Shared();
  auto models = LoadInferenceModels(f.ckpt);
  auto ds = Dataset::Load(f.data);
  const auto &x = ds.features(3);
  auto pool = ToyPool(2, 1);
  auto y0 = AnonymiseUtterance(x, pool[0].embedding, models.hider, models.combiner);
  auto y1 = AnonymiseUtterance(x, pool[1].embedding, models.hider, models.combiner);
  CHECK(y0.frame_count() == x.frame_count());
  CHECK(y0.frames.cols() == kMelBins);
  double diff = 0;
  for (std::size_t i = 0; i < y0.frames.data().size(); ++i)
    diff += std::abs(y0.frames.data()[i] - y1.frames.data()[i]);
  CHECK(diff / y0.frames.data().size() > 0.0);
  CHECK(AnonymiseUtterance(x, pool[0].embedding, models.hider, models.combiner) == y0);

  // A vector nobody has seen, with a larger norm than the training ones.
  SpeakerEmbedding unseen;
  Rng rng(99);
  for (int64_t d = 0; d < kEmbeddingDim; ++d) unseen.values.push_back(static_cast<float>(3 * rng.Normal()));
  auto yu = AnonymiseUtterance(x, unseen, models.hider, models.combiner);
  CHECK(Validate(yu).ok());

  SpeakerEmbedding short_vec{std::vector<float>(10, 0.1f)};
  CHECK_THROWS_AS_KIND(AnonymiseUtterance(x, short_vec, models.hider, models.combiner),
                       ErrorKind::kValidation);

  // The batched in-memory path agrees with the per-utterance one.
  auto policy = ToyPolicy(TargetMode::kUtteranceRandom);
  auto sub_idx = std::vector<std::size_t>{0, 1, 2, 150, 799};
  auto sub = ds.Subset(sub_idx);
  std::vector<std::string> ids;
  auto batched = AnonymiseDataset(sub, policy, models.hider, models.combiner, &ids);
  REQUIRE(batched.size() == sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const auto &t = SelectTarget(policy, sub.record(i).id, sub.record(i).speaker_id);
    CHECK(ids[i] == t.id);
    auto one = AnonymiseUtterance(sub.features(i), t.embedding, models.hider, models.combiner);
    double worst = 0;
    for (std::size_t k = 0; k < one.frames.data().size(); ++k)
      worst = std::max(worst, static_cast<double>(std::abs(one.frames.data()[k] -
                                                           batched[i].frames.data()[k])));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("corpus anonymisation") {
  auto &f = Shared();
  auto policy = ToyPolicy(TargetMode::kUtteranceRandom, 64, 17);
  TempDir o1, o2, o3;
  auto r1 = AnonymiseCorpus(f.data, policy, f.ckpt, o1.path(), {true});
  CHECK(r1.failures == 0);
  CHECK(r1.rows.size() == 800);
  auto manifest = LoadManifest(o1.path());
  CHECK(manifest.records.size() == 800);
  std::size_t files = 0;
  for (const auto &e : fs::directory_iterator(o1.path() / "features")) files += e.is_regular_file();
  CHECK(files == 800);
  CHECK(fs::exists(o1.path() / "hidden" / (manifest.records[0].id + ".bin")));
  CHECK(manifest.provenance["policy"] == "utterance-random");

  // Nothing is passed through unmodified, and lengths are kept.
  auto src = LoadManifest(f.data);
  for (std::size_t i = 0; i < 800; i += 97) {
    auto a = LoadMatrix(f.data / src.records[i].features);
    auto b = LoadMatrix(o1.path() / manifest.records[i].features);
    CHECK(a.rows() == b.rows());
    CHECK_FALSE(a == b);
    CHECK(LoadEmbedding(o1.path() / "embeddings" / (src.records[i].id + ".bin")) ==
          SelectTarget(policy, src.records[i].id, src.records[i].speaker_id).embedding);
  }

  // Same seed: identical mapping and outputs.  No finder: identical outputs.
  const fs::path no_finder = f.dir.path() / "ckpt_no_finder";
  fs::copy(f.ckpt, no_finder, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  fs::remove(no_finder / "finder.bin");
  fs::remove(no_finder / "opt_finder.pt");
  AnonymiseCorpus(f.data, policy, f.ckpt, o2.path());
  AnonymiseCorpus(f.data, policy, no_finder, o3.path());
  CHECK(Slurp(o1.path() / "mapping.csv") == Slurp(o2.path() / "mapping.csv"));
  CHECK(Slurp(o1.path() / "mapping.csv") == Slurp(o3.path() / "mapping.csv"));
  for (std::size_t i = 0; i < 800; i += 41) {
    const auto rel = manifest.records[i].features;
    CHECK(Slurp(o1.path() / rel) == Slurp(o2.path() / rel));
    CHECK(Slurp(o1.path() / rel) == Slurp(o3.path() / rel));
  }
}

TEST_CASE("target choice ignores the audio and failures are reported per utterance") {
  auto &f = Shared();
  TempDir copy;
  fs::copy(f.data, copy.path(), fs::copy_options::recursive);
  auto m = LoadManifest(copy.path());
  // Different content for one utterance, a broken file for another.
  FrameMatrix other(7, kMelBins);
  for (auto &v : other.mutable_data()) v = 0.25f;
  SaveMatrix(copy.path() / m.records[5].features, other);
  { std::ofstream(copy.path() / m.records[9].features, std::ios::trunc) << "garbage"; }

  auto policy = ToyPolicy(TargetMode::kSpeakerConsistentRandom, 8, 2);
  TempDir a, b;
  auto clean = AnonymiseCorpus(f.data, policy, f.ckpt, a.path());
  auto dirty = AnonymiseCorpus(copy.path(), policy, f.ckpt, b.path());
  CHECK(dirty.failures == 1);
  CHECK(dirty.rows[9].status == "error");
  CHECK_FALSE(dirty.rows[9].message.empty());
  for (std::size_t i = 0; i < clean.rows.size(); ++i)
    CHECK(clean.rows[i].target_id == dirty.rows[i].target_id);
  CHECK(LoadManifest(b.path()).records.size() == 799);
  CHECK(LoadMatrix(b.path() / "features" / (m.records[5].id + ".bin")).rows() == 7);

  TargetPolicy empty;
  TempDir c;
  CHECK_THROWS_AS_KIND(AnonymiseCorpus(f.data, empty, f.ckpt, c.path()), ErrorKind::kConfig);
  CHECK_THROWS_AS_KIND(AnonymiseCorpus(f.data, policy, c.path() / "missing", c.path() / "o"),
                       ErrorKind::kLoad);
}
