// anonymise/anonymise.cc

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

#include "hfcvp/anonymise.h"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "hfcvp/checkpoint.h"
#include "hfcvp/error.h"
#include "hfcvp/rng.h"
#include "hfcvp/serialize.h"

namespace hfcvp {

namespace fs = std::filesystem;

const char *TargetModeName(TargetMode mode) {
  switch (mode) {
    case TargetMode::kUtteranceRandom: return "utterance-random";
    case TargetMode::kFixedTarget: return "fixed-target";
    case TargetMode::kSpeakerConsistentRandom: return "speaker-consistent-random";
  }
  return "?";
}

TargetMode ParseTargetMode(const std::string &name) {
  if (name == "utterance-random") return TargetMode::kUtteranceRandom;
  if (name == "fixed-target") return TargetMode::kFixedTarget;
  if (name == "speaker-consistent-random") return TargetMode::kSpeakerConsistentRandom;
  Fail(ErrorKind::kConfig, "unknown target policy '" + name +
                               "' (utterance-random|fixed-target|speaker-consistent-random)");
}

ValidationReport Validate(const TargetPolicy &policy) {
  ValidationReport r;
  if (policy.pool.empty()) r.violations.push_back("target pool is empty");
  for (const auto &e : policy.pool) {
    auto sub = Validate(e.embedding);
    for (auto &v : sub.violations) r.violations.push_back("pool entry " + e.id + ": " + v);
  }
  if (policy.mode == TargetMode::kFixedTarget && !policy.fixed_id.empty() &&
      std::none_of(policy.pool.begin(), policy.pool.end(),
                   [&](const PoolEntry &e) { return e.id == policy.fixed_id; }))
    r.violations.push_back("fixed target '" + policy.fixed_id + "' is not in the pool");
  return r;
}

std::size_t SelectTargetIndex(const TargetPolicy &policy, std::string_view utterance_id,
                              std::string_view source_speaker_id) {
  if (policy.pool.empty()) Fail(ErrorKind::kConfig, "target pool is empty");
  const uint64_t n = policy.pool.size();
  switch (policy.mode) {
    case TargetMode::kUtteranceRandom:
      return static_cast<std::size_t>(HashString(policy.seed, utterance_id) % n);
    case TargetMode::kSpeakerConsistentRandom:
      return static_cast<std::size_t>(HashString(MixSeed(policy.seed, 0x5bea7e5ULL),
                                                 source_speaker_id) % n);
    case TargetMode::kFixedTarget: {
      if (policy.fixed_id.empty()) return 0;
      for (std::size_t i = 0; i < policy.pool.size(); ++i)
        if (policy.pool[i].id == policy.fixed_id) return i;
      Fail(ErrorKind::kConfig, "fixed target '" + policy.fixed_id + "' is not in the pool");
    }
  }
  Fail(ErrorKind::kConfig, "bad target mode");
}

const PoolEntry &SelectTarget(const TargetPolicy &policy, std::string_view utterance_id,
                              std::string_view source_speaker_id) {
  return policy.pool[SelectTargetIndex(policy, utterance_id, source_speaker_id)];
}

std::vector<PoolEntry> LoadPool(const fs::path &dir) {
  if (!fs::is_directory(dir)) Fail(ErrorKind::kIo, "pool directory not found: " + dir.string());
  std::vector<PoolEntry> pool;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".bin") continue;
    PoolEntry e{entry.path().stem().string(), LoadEmbedding(entry.path())};
    ThrowIfInvalid(Validate(e.embedding), "pool embedding " + e.id);
    pool.push_back(std::move(e));
  }
  std::sort(pool.begin(), pool.end(),
            [](const PoolEntry &a, const PoolEntry &b) { return a.id < b.id; });
  if (pool.empty()) Fail(ErrorKind::kConfig, "no *.bin embeddings in " + dir.string());
  return pool;
}

std::vector<PoolEntry> ToyPool(int64_t n, uint64_t seed) {
  if (n < 1) Fail(ErrorKind::kConfig, "toy pool size must be >= 1");
  std::vector<PoolEntry> pool;
  for (int64_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "ext%04lld", static_cast<long long>(i));
    pool.push_back({id, ToyEmbedding(MixSeed(seed, 0xe7e7ULL), id)});
  }
  return pool;
}

std::vector<PoolEntry> PoolFromSpec(const std::string &spec, uint64_t seed) {
  if (spec.rfind("toy:", 0) == 0) {
    try {
      return ToyPool(std::stoll(spec.substr(4)), seed);
    } catch (const std::logic_error &) {
      Fail(ErrorKind::kConfig, "bad pool spec '" + spec + "' (toy:N)");
    }
  }
  return LoadPool(spec);
}

MelSpectrogram AnonymiseUtterance(const MelSpectrogram &x, const SpeakerEmbedding &target,
                                  Hider &hider, Combiner &combiner) {
  ThrowIfInvalid(Validate(x), "input features");
  ThrowIfInvalid(Validate(target), "target embedding");
  torch::NoGradGuard no_grad;
  hider->eval();
  combiner->eval();
  auto xt = ToTensor(x.frames);
  auto mask = torch::ones({1, x.frame_count()}, torch::kFloat32);
  auto h = HiderForward(hider, xt, mask);
  auto [pre, post] = CombinerForward(combiner, h, ToTensor(target), mask);
  MelSpectrogram y{ToFrameMatrix(post), x.sample_rate_hz};
  return y;
}

void AnonymiseReport::WriteCsv(const fs::path &path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path.string());
  os << "utterance_id,source_speaker,target_id,status,message\n";
  for (const auto &r : rows) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << r.utterance_id << ',' << r.source_speaker << ',' << r.target_id << ',' << r.status
       << ',' << msg << '\n';
  }
}

AnonymiseReport AnonymiseCorpus(const fs::path &data_root, const TargetPolicy &policy,
                                const fs::path &checkpoint, const fs::path &out_dir,
                                const AnonymiseOptions &options) {
  ThrowIfInvalidConfig(Validate(policy), "target policy");
  const DatasetManifest manifest = LoadManifest(data_root);
  InferenceModels models = LoadInferenceModels(checkpoint);

  fs::create_directories(out_dir / "features");
  fs::create_directories(out_dir / "embeddings");
  if (options.export_hidden) fs::create_directories(out_dir / "hidden");

  DatasetManifest out = manifest;
  out.embedding_key = EmbeddingKey::kUtterance;
  out.records.clear();
  out.class_counts.assign(out.class_counts.size(), 0);
  out.provenance["anonymised_from"] = fs::absolute(data_root).string();
  out.provenance["checkpoint"] = fs::absolute(checkpoint).string();
  out.provenance["policy"] = TargetModeName(policy.mode);
  out.provenance["policy_seed"] = policy.seed;

  AnonymiseReport report;
  torch::NoGradGuard no_grad;
  for (const auto &rec : manifest.records) {
    AnonymiseRow row{rec.id, rec.speaker_id, "", "ok", ""};
    try {
      const PoolEntry &target = SelectTarget(policy, rec.id, rec.speaker_id);
      row.target_id = target.id;
      MelSpectrogram x{LoadMatrix(data_root / rec.features), manifest.features.sample_rate_hz};
      ThrowIfInvalid(Validate(x), rec.features);
      auto xt = ToTensor(x.frames);
      auto mask = torch::ones({1, x.frame_count()}, torch::kFloat32);
      auto h = HiderForward(models.hider, xt, mask);
      auto post = CombinerForward(models.combiner, h, ToTensor(target.embedding), mask).second;
      FrameMatrix y = ToFrameMatrix(post);
      if (y == x.frames) Fail(ErrorKind::kValidation, "output identical to the source features");
      UtteranceRecord o = rec;
      o.features = "features/" + rec.id + ".bin";
      o.frame_count = y.rows();
      SaveMatrix(out_dir / o.features, y);
      SaveEmbedding(out_dir / "embeddings" / (rec.id + ".bin"), target.embedding);
      if (options.export_hidden)
        SaveMatrix(out_dir / "hidden" / (rec.id + ".bin"), ToFrameMatrix(h));
      out.records.push_back(std::move(o));
      ++out.class_counts[static_cast<std::size_t>(rec.label)];
    } catch (const std::exception &e) {
      row.status = "error";
      row.message = e.what();
      ++report.failures;
    }
    report.rows.push_back(std::move(row));
  }
  SaveManifest(out_dir, out);
  report.WriteCsv(out_dir / "mapping.csv");
  return report;
}

std::vector<MelSpectrogram> AnonymiseDataset(const Dataset &dataset, const TargetPolicy &policy,
                                             Hider &hider, Combiner &combiner,
                                             std::vector<std::string> *target_ids) {
  ThrowIfInvalidConfig(Validate(policy), "target policy");
  torch::NoGradGuard no_grad;
  hider->eval();
  combiner->eval();
  std::vector<MelSpectrogram> out;
  out.reserve(dataset.size());
  constexpr std::size_t kBatch = 32;
  for (std::size_t start = 0; start < dataset.size(); start += kBatch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(dataset.size(), start + kBatch); ++i)
      idx.push_back(i);
    Batch b = MakeBatch(dataset, idx);
    auto targets = torch::empty_like(b.embeddings);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto &rec = dataset.record(idx[k]);
      const PoolEntry &t = SelectTarget(policy, rec.id, rec.speaker_id);
      if (target_ids) target_ids->push_back(t.id);
      targets[static_cast<int64_t>(k)].copy_(ToTensor(t.embedding)[0]);
    }
    auto h = hider(b.features, b.mask);
    auto post = combiner(h, targets, b.mask).second;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int64_t frames = dataset.features(idx[k]).frame_count();
      out.push_back({ToFrameMatrix(post[static_cast<int64_t>(k)].narrow(0, 0, frames)),
                     dataset.features(idx[k]).sample_rate_hz});
    }
  }
  hider->train();
  combiner->train();
  return out;
}

}  // namespace hfcvp
