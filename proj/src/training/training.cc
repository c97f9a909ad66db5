// training/training.cc

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

#include "hfcvp/training.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "hfcvp/batch_losses.h"
#include "hfcvp/checkpoint.h"
#include "hfcvp/error.h"
#include "hfcvp/rng.h"
#include "hfcvp/serialize.h"
#include "hfcvp/validate.h"

namespace hfcvp {

namespace fs = std::filesystem;

namespace {

// Salt for the parameter-initialisation stream; epochs use MixSeed(seed, e).
constexpr uint64_t kInitSalt = 0x1417'0000'0000ULL;

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void SetLr(torch::optim::Adam &opt, double lr) {
  for (auto &group : opt.param_groups())
    static_cast<torch::optim::AdamOptions &>(group.options()).lr(lr);
}

void ClipIfEnabled(const std::vector<torch::Tensor> &params, double max_norm) {
  if (max_norm > 0.0) torch::nn::utils::clip_grad_norm_(params, max_norm);
}

// Turns off parameter gradients of a module for the guard's lifetime.
class FreezeGuard {
 public:
  explicit FreezeGuard(torch::nn::Module &m) : params_(m.parameters()) {
    for (auto &p : params_) p.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto &p : params_) p.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard &) = delete;
  FreezeGuard &operator=(const FreezeGuard &) = delete;

 private:
  std::vector<torch::Tensor> params_;
};

}  // namespace

// ---------------------------------------------------------------------------

void to_json(nlohmann::json &j, const EpochMetrics &m) {
  j = nlohmann::json{{"epoch", m.epoch},
                     {"lr_g", m.lr_g},
                     {"lr_f", m.lr_f},
                     {"loss_combiner", m.loss_combiner},
                     {"loss_leakage", m.loss_leakage},
                     {"loss_finder", m.loss_finder},
                     {"loss_g", m.loss_g},
                     {"probe_acc", m.probe_acc ? nlohmann::json(*m.probe_acc) : nlohmann::json()}};
}

void from_json(const nlohmann::json &j, EpochMetrics &m) {
  m.epoch = j.at("epoch");
  m.lr_g = j.at("lr_g");
  m.lr_f = j.at("lr_f");
  m.loss_combiner = j.at("loss_combiner");
  m.loss_leakage = j.at("loss_leakage");
  m.loss_finder = j.at("loss_finder");
  m.loss_g = j.value("loss_g", 0.0);
  if (j.contains("probe_acc") && !j.at("probe_acc").is_null())
    m.probe_acc = j.at("probe_acc").get<double>();
  else
    m.probe_acc.reset();
}

void MetricsLog::Append(const EpochMetrics &m) {
  if (!rows_.empty() && m.epoch <= rows_.back().epoch)
    Fail(ErrorKind::kValidation, "metrics epochs must be strictly increasing (got " +
                                     std::to_string(m.epoch) + " after " +
                                     std::to_string(rows_.back().epoch) + ")");
  rows_.push_back(m);
}

void MetricsLog::TruncateAfter(int64_t epoch) {
  while (!rows_.empty() && rows_.back().epoch > epoch) rows_.pop_back();
}

void MetricsLog::WriteCsv(const fs::path &path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path.string());
  os << "epoch,lr_g,lr_f,loss_combiner,loss_leakage,loss_finder,probe_acc\n";
  for (const auto &r : rows_) {
    os << r.epoch << ',' << FormatDouble(r.lr_g) << ',' << FormatDouble(r.lr_f) << ','
       << FormatDouble(r.loss_combiner) << ',' << FormatDouble(r.loss_leakage) << ','
       << FormatDouble(r.loss_finder) << ',';
    if (r.probe_acc) os << FormatDouble(*r.probe_acc);
    os << '\n';
  }
  if (!os) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

MetricsLog MetricsLog::ReadCsv(const fs::path &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) ||
      line != "epoch,lr_g,lr_f,loss_combiner,loss_leakage,loss_finder,probe_acc")
    Fail(ErrorKind::kFormat, path.string() + ": unexpected metrics header");
  MetricsLog log;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 7) Fail(ErrorKind::kFormat, path.string() + ": bad row '" + line + "'");
    try {
      EpochMetrics m;
      m.epoch = std::stoll(cells[0]);
      m.lr_g = std::stod(cells[1]);
      m.lr_f = std::stod(cells[2]);
      m.loss_combiner = std::stod(cells[3]);
      m.loss_leakage = std::stod(cells[4]);
      m.loss_finder = std::stod(cells[5]);
      if (!cells[6].empty()) m.probe_acc = std::stod(cells[6]);
      log.Append(m);
    } catch (const std::logic_error &) {
      Fail(ErrorKind::kFormat, path.string() + ": bad number in '" + line + "'");
    }
  }
  return log;
}

void MetricsLog::WriteJsonLines(const fs::path &path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto &r : rows_) os << nlohmann::json(r).dump() << '\n';
}

nlohmann::json MetricsLog::ToJson() const { return nlohmann::json(rows_); }

MetricsLog MetricsLog::FromJson(const nlohmann::json &j) {
  MetricsLog log;
  for (const auto &r : j) log.Append(r.get<EpochMetrics>());
  return log;
}

// ---------------------------------------------------------------------------

std::pair<double, double> LrAt(int64_t epoch, const TrainConfig &config) {
  if (epoch < 0) Fail(ErrorKind::kConfig, "epoch must be >= 0");
  if (epoch <= config.decay_start_epoch) return {config.lr_generator, config.lr_finder};
  const double factor =
      std::pow(config.decay_gamma, static_cast<double>(epoch - config.decay_start_epoch));
  return {config.lr_generator * factor, config.lr_finder * factor};
}

TrainState TrainState::Create(const TrainConfig &config, const NetworkConfig &networks) {
  ThrowIfInvalidConfig(Validate(config), "train config");
  TrainState s;
  s.config = config;
  s.networks = networks;
  torch::manual_seed(MixSeed(config.seed, kInitSalt));
  s.hider = Hider(networks.hider);
  s.finder = Finder(networks.finder);
  s.combiner = Combiner(networks.combiner);
  const auto [lr_g, lr_f] = LrAt(1, config);
  s.opt_generator = std::make_unique<torch::optim::Adam>(
      s.GeneratorParameters(), torch::optim::AdamOptions(lr_g));
  s.opt_finder = std::make_unique<torch::optim::Adam>(s.finder->parameters(),
                                                      torch::optim::AdamOptions(lr_f));
  s.lr_g = lr_g;
  s.lr_f = lr_f;
  s.best_loss_g = std::numeric_limits<double>::infinity();
  return s;
}

std::vector<torch::Tensor> TrainState::GeneratorParameters() const {
  auto params = hider->parameters();
  for (auto &p : combiner->parameters()) params.push_back(p);
  return params;
}

void TrainState::SetLearningRates(int64_t e) {
  std::tie(lr_g, lr_f) = LrAt(e, config);
  SetLr(*opt_generator, lr_g);
  SetLr(*opt_finder, lr_f);
}

torch::Tensor PriorTensor(const ClassPrior &prior) {
  ThrowIfInvalid(Validate(prior), "class prior");
  return torch::tensor(prior.probs, torch::kFloat64).to(torch::kFloat32);
}

// ---------------------------------------------------------------------------

double TrainStepFinder(TrainState &s, const Batch &batch) {
  torch::Tensor h;
  {
    torch::NoGradGuard no_grad;
    h = s.hider(batch.features, batch.mask);
  }
  s.finder->train();
  s.opt_finder->zero_grad();
  auto probs = s.finder(h, batch.mask);
  auto loss = BatchFinder(s.config.loss_regime, probs, batch.labels);
  const double value = loss.item<double>();
  if (!std::isfinite(value)) {
    s.opt_finder->zero_grad();
    Fail(ErrorKind::kDivergence, "non-finite finder loss at step " +
                                     std::to_string(s.global_step));
  }
  loss.backward();
  ClipIfEnabled(s.finder->parameters(), s.config.grad_clip_norm);
  s.opt_finder->step();
  s.sum_finder += value;
  ++s.finder_steps;
  return value;
}

GeneratorLosses TrainStepGenerator(TrainState &s, const Batch &batch,
                                   const torch::Tensor &prior) {
  if (prior.dim() != 1 || prior.size(0) != s.num_classes())
    Fail(ErrorKind::kDimension, "prior must have length C = " +
                                    std::to_string(s.num_classes()));
  s.hider->train();
  s.combiner->train();
  // The finder is a fixed function here: no parameter gradients, no update.
  FreezeGuard frozen(*s.finder);
  s.opt_generator->zero_grad();
  auto h = s.hider(batch.features, batch.mask);
  auto [pre, post] = s.combiner(h, batch.embeddings, batch.mask);
  auto recon = BatchReconstructionMse(pre, batch.features, batch.mask) +
               BatchReconstructionMse(post, batch.features, batch.mask);
  auto leakage = BatchLeakage(s.config.loss_regime, s.finder(h, batch.mask), prior);
  auto total = recon + s.config.beta * leakage;

  GeneratorLosses out;
  out.combiner = recon.item<double>();
  out.leakage = leakage.item<double>();
  out.total = out.combiner + s.config.beta * out.leakage;
  if (!std::isfinite(out.total) || !std::isfinite(total.item<double>())) {
    s.opt_generator->zero_grad();
    Fail(ErrorKind::kDivergence, "non-finite generator loss at step " +
                                     std::to_string(s.global_step));
  }
  total.backward();
  ClipIfEnabled(s.GeneratorParameters(), s.config.grad_clip_norm);
  s.opt_generator->step();
  s.sum_combiner += out.combiner;
  s.sum_leakage += out.leakage;
  ++s.generator_steps;
  ++s.global_step;
  return out;
}

std::vector<FrameMatrix> ComputeHidden(Hider &hider, const Dataset &dataset,
                                       int64_t batch_size) {
  torch::NoGradGuard no_grad;
  hider->eval();
  std::vector<FrameMatrix> out(dataset.size());
  for (std::size_t start = 0; start < dataset.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start;
         i < std::min(dataset.size(), start + static_cast<std::size_t>(batch_size)); ++i)
      idx.push_back(i);
    const Batch b = MakeBatch(dataset, idx);
    auto h = hider(b.features, b.mask);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int64_t frames = dataset.features(idx[k]).frame_count();
      out[idx[k]] = ToFrameMatrix(h[static_cast<int64_t>(k)].narrow(0, 0, frames));
    }
  }
  hider->train();
  return out;
}

// ---------------------------------------------------------------------------

EpochMetrics TrainEpoch(TrainState &s, const Dataset &dataset, const torch::Tensor &prior) {
  const int64_t epoch = s.epoch + 1;
  torch::manual_seed(MixSeed(s.config.seed, static_cast<uint64_t>(epoch)));
  s.SetLearningRates(epoch);
  s.sum_combiner = s.sum_leakage = s.sum_finder = 0.0;
  s.generator_steps = s.finder_steps = 0;

  // A step that fails with a non-finite loss changes nothing; only a run of
  // `divergence_patience` consecutive failures aborts.
  auto guarded = [&](auto &&step) {
    try {
      step();
      s.nonfinite_streak = 0;
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kDivergence) throw;
      if (++s.nonfinite_streak >= s.config.divergence_patience)
        Fail(ErrorKind::kDivergence,
             std::string(e.what()) + "; " + std::to_string(s.nonfinite_streak) +
                 " consecutive non-finite losses in epoch " + std::to_string(epoch));
    }
  };

  BatchStream stream(dataset, s.config.batch_size, s.config.seed, epoch);
  Batch batch;
  while (stream.Next(&batch)) {
    for (int64_t k = 0; k < s.config.finder_steps_per_generator_step; ++k)
      guarded([&] { TrainStepFinder(s, batch); });
    guarded([&] { TrainStepGenerator(s, batch, prior); });
  }

  EpochMetrics m;
  m.epoch = epoch;
  m.lr_g = s.lr_g;
  m.lr_f = s.lr_f;
  if (s.generator_steps > 0) {
    m.loss_combiner = s.sum_combiner / static_cast<double>(s.generator_steps);
    m.loss_leakage = s.sum_leakage / static_cast<double>(s.generator_steps);
  }
  if (s.finder_steps > 0) m.loss_finder = s.sum_finder / static_cast<double>(s.finder_steps);
  m.loss_g = m.loss_combiner + s.config.beta * m.loss_leakage;
  s.epoch = epoch;
  return m;
}

RunResult RunTraining(const TrainConfig &config, const NetworkConfig &networks,
                      const Dataset &dataset, const ClassPrior &prior,
                      const RunOptions &options) {
  ThrowIfInvalidConfig(Validate(config), "train config");
  if (dataset.size() == 0) Fail(ErrorKind::kEmptyData, "training set is empty");
  if (networks.finder.num_classes != dataset.manifest().num_classes)
    Fail(ErrorKind::kConfig, "finder has " + std::to_string(networks.finder.num_classes) +
                                 " classes, dataset has " +
                                 std::to_string(dataset.manifest().num_classes));
  const torch::Tensor prior_t = PriorTensor(prior);
  if (prior_t.size(0) != networks.finder.num_classes)
    Fail(ErrorKind::kDimension, "prior length differs from the number of classes");

  TrainState s;
  if (options.resume_from) {
    s = LoadCheckpoint(*options.resume_from);
    if (!(s.networks == networks))
      Fail(ErrorKind::kLoad, "checkpoint network config differs from the requested one");
    // Only the run length may change on resume.
    TrainConfig saved = s.config;
    saved.epochs = config.epochs;
    if (!(saved == config))
      Fail(ErrorKind::kLoad, "checkpoint train config differs from the requested one");
    s.config.epochs = config.epochs;
  } else {
    s = TrainState::Create(config, networks);
  }

  const fs::path ckpt_root = options.out_dir / "checkpoints";
  fs::create_directories(ckpt_root);
  RunResult result;

  auto flush_metrics = [&] {
    s.metrics.WriteCsv(options.out_dir / "metrics.csv");
    s.metrics.WriteJsonLines(options.out_dir / "metrics.jsonl");
  };
  flush_metrics();

  while (s.epoch < s.config.epochs) {
    EpochMetrics m;
    try {
      m = TrainEpoch(s, dataset, prior_t);
    } catch (const Error &e) {
      if (e.kind() == ErrorKind::kDivergence) {
        SaveCheckpoint(s, ckpt_root / "diverged");
        flush_metrics();
      }
      throw;
    }
    if (options.probe && s.config.probe_every > 0 && m.epoch % s.config.probe_every == 0)
      m.probe_acc = options.probe(s);
    s.metrics.Append(m);
    flush_metrics();
    if (options.on_epoch) options.on_epoch(m);

    if (m.loss_g < s.best_loss_g) {
      s.best_loss_g = m.loss_g;
      s.best_epoch = m.epoch;
      SaveCheckpoint(s, ckpt_root / "best");
    }
    if (s.config.checkpoint_every > 0 && m.epoch % s.config.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04lld", static_cast<long long>(m.epoch));
      SaveCheckpoint(s, ckpt_root / name);
    }
  }
  SaveCheckpoint(s, ckpt_root / "last");
  result.metrics = s.metrics;
  result.last_checkpoint = ckpt_root / "last";
  result.best_checkpoint = ckpt_root / "best";
  return result;
}

}  // namespace hfcvp
