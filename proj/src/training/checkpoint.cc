// training/checkpoint.cc

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

#include "hfcvp/checkpoint.h"

#include <cstring>
#include <limits>

#include "hfcvp/error.h"
#include "hfcvp/serialize.h"

namespace hfcvp {

namespace fs = std::filesystem;

namespace {

constexpr int kCheckpointVersion = 1;

std::vector<torch::Tensor> ModuleTensors(const torch::nn::Module &m,
                                         std::vector<std::string> *names = nullptr) {
  std::vector<torch::Tensor> out;
  for (const auto &item : m.named_parameters()) {
    if (names) names->push_back(item.key());
    out.push_back(item.value());
  }
  for (const auto &item : m.named_buffers()) {
    if (names) names->push_back(item.key());
    out.push_back(item.value());
  }
  return out;
}

nlohmann::json Describe(const torch::nn::Module &m) {
  std::vector<std::string> names;
  auto tensors = ModuleTensors(m, &names);
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < tensors.size(); ++i)
    entries.push_back({{"name", names[i]}, {"shape", tensors[i].sizes().vec()}});
  return {{"tensors", entries},
          {"parameters", CountParameters(m)},
          {"checksum", ParameterChecksum(m)}};
}

void RequireFile(const fs::path &p) {
  if (!fs::is_regular_file(p)) Fail(ErrorKind::kLoad, "checkpoint file missing: " + p.string());
}

void CheckDescription(const torch::nn::Module &m, const nlohmann::json &j,
                      const std::string &what) {
  std::vector<std::string> names;
  ModuleTensors(m, &names);
  const auto &entries = j.at("tensors");
  if (entries.size() != names.size())
    Fail(ErrorKind::kLoad, what + ": checkpoint lists " + std::to_string(entries.size()) +
                               " tensors, network has " + std::to_string(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i)
    if (entries[i].at("name").get<std::string>() != names[i])
      Fail(ErrorKind::kLoad, what + ": tensor " + std::to_string(i) + " is '" +
                                 entries[i].at("name").get<std::string>() + "', expected '" +
                                 names[i] + "'");
}

nlohmann::json ReadManifest(const fs::path &dir) {
  RequireFile(dir / "manifest.json");
  nlohmann::json j;
  try {
    j = ReadJsonFile(dir / "manifest.json");
  } catch (const Error &e) {
    Fail(ErrorKind::kLoad, std::string("checkpoint manifest: ") + e.what());
  }
  if (j.value("format", "") != "hfcvp-checkpoint" || j.value("version", 0) != kCheckpointVersion)
    Fail(ErrorKind::kLoad, (dir / "manifest.json").string() + " is not a checkpoint manifest");
  return j;
}

}  // namespace

void SaveModuleParameters(const torch::nn::Module &module, const fs::path &path) {
  std::vector<TensorRecord> records;
  for (const auto &t : ModuleTensors(module)) {
    auto c = t.detach().to(torch::kFloat32).contiguous();
    TensorRecord r;
    r.dims = c.sizes().vec();
    const float *p = c.data_ptr<float>();
    r.data.assign(p, p + c.numel());
    records.push_back(std::move(r));
  }
  SaveTensorRecords(path, records);
}

void LoadModuleParameters(torch::nn::Module &module, const fs::path &path) {
  RequireFile(path);
  std::vector<TensorRecord> records;
  try {
    records = LoadTensorRecords(path);
  } catch (const Error &e) {
    Fail(ErrorKind::kLoad, e.what());
  }
  auto tensors = ModuleTensors(module);
  if (records.size() != tensors.size())
    Fail(ErrorKind::kLoad, path.string() + ": holds " + std::to_string(records.size()) +
                               " tensors, network expects " + std::to_string(tensors.size()));
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (records[i].dims != tensors[i].sizes().vec())
      Fail(ErrorKind::kLoad, path.string() + ": shape mismatch at tensor " + std::to_string(i));
    auto src = torch::from_blob(records[i].data.data(), tensors[i].sizes(), torch::kFloat32);
    tensors[i].copy_(src);
  }
}

void SaveCheckpoint(const TrainState &s, const fs::path &dir) {
  // Write into a sibling directory, then swap it in, so an interrupted save
  // never leaves a half-written checkpoint under the final name.
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  nlohmann::json manifest = {{"format", "hfcvp-checkpoint"},
                             {"version", kCheckpointVersion},
                             {"num_classes", s.num_classes()},
                             {"networks", s.networks},
                             {"hider", Describe(*s.hider)},
                             {"combiner", Describe(*s.combiner)},
                             {"finder", Describe(*s.finder)}};
  WriteJsonFile(tmp / "manifest.json", manifest);

  nlohmann::json state = {
      {"train_config", s.config},
      {"epoch", s.epoch},
      {"global_step", s.global_step},
      {"lr_g", s.lr_g},
      {"lr_f", s.lr_f},
      {"nonfinite_streak", s.nonfinite_streak},
      {"best_loss_g", std::isfinite(s.best_loss_g) ? nlohmann::json(s.best_loss_g)
                                                   : nlohmann::json()},
      {"best_epoch", s.best_epoch},
      {"metrics", s.metrics.ToJson()},
  };
  WriteJsonFile(tmp / "state.json", state);

  SaveModuleParameters(*s.hider, tmp / "hider.bin");
  SaveModuleParameters(*s.combiner, tmp / "combiner.bin");
  SaveModuleParameters(*s.finder, tmp / "finder.bin");
  torch::save(*s.opt_generator, (tmp / "opt_generator.pt").string());
  torch::save(*s.opt_finder, (tmp / "opt_finder.pt").string());

  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

TrainState LoadCheckpoint(const fs::path &dir) {
  const nlohmann::json manifest = ReadManifest(dir);
  RequireFile(dir / "state.json");
  for (const char *f : {"hider.bin", "combiner.bin", "finder.bin", "opt_generator.pt",
                        "opt_finder.pt"})
    RequireFile(dir / f);
  try {
    const nlohmann::json state = ReadJsonFile(dir / "state.json");
    TrainState s = TrainState::Create(state.at("train_config").get<TrainConfig>(),
                                      manifest.at("networks").get<NetworkConfig>());
    CheckDescription(*s.hider, manifest.at("hider"), "hider");
    CheckDescription(*s.combiner, manifest.at("combiner"), "combiner");
    CheckDescription(*s.finder, manifest.at("finder"), "finder");
    LoadModuleParameters(*s.hider, dir / "hider.bin");
    LoadModuleParameters(*s.combiner, dir / "combiner.bin");
    LoadModuleParameters(*s.finder, dir / "finder.bin");
    torch::load(*s.opt_generator, (dir / "opt_generator.pt").string());
    torch::load(*s.opt_finder, (dir / "opt_finder.pt").string());
    s.epoch = state.at("epoch");
    s.global_step = state.at("global_step");
    s.nonfinite_streak = state.value("nonfinite_streak", int64_t{0});
    s.best_epoch = state.value("best_epoch", int64_t{0});
    s.best_loss_g = state.at("best_loss_g").is_null() ? std::numeric_limits<double>::infinity()
                                                      : state.at("best_loss_g").get<double>();
    s.metrics = MetricsLog::FromJson(state.at("metrics"));
    s.SetLearningRates(std::max<int64_t>(s.epoch, 1));
    return s;
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kLoad, (dir / "state.json").string() + ": " + e.what());
  } catch (const c10::Error &e) {
    Fail(ErrorKind::kLoad, dir.string() + ": optimiser state: " + e.what_without_backtrace());
  }
}

InferenceModels LoadInferenceModels(const fs::path &dir) {
  const nlohmann::json manifest = ReadManifest(dir);
  InferenceModels m;
  try {
    m.networks = manifest.at("networks").get<NetworkConfig>();
    m.hider = Hider(m.networks.hider);
    m.combiner = Combiner(m.networks.combiner);
    CheckDescription(*m.hider, manifest.at("hider"), "hider");
    CheckDescription(*m.combiner, manifest.at("combiner"), "combiner");
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kLoad, (dir / "manifest.json").string() + ": " + e.what());
  }
  LoadModuleParameters(*m.hider, dir / "hider.bin");
  LoadModuleParameters(*m.combiner, dir / "combiner.bin");
  m.hider->eval();
  m.combiner->eval();
  return m;
}

}  // namespace hfcvp
