// eval/eval.cc

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

#include "hfcvp/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "hfcvp/anonymise.h"
#include "hfcvp/checkpoint.h"
#include "hfcvp/error.h"
#include "hfcvp/rng.h"
#include "hfcvp/training.h"

namespace hfcvp {

namespace fs = std::filesystem;

namespace {

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitCsv(const std::string &line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

// ---------------------------------------------------------------------------
// EER

double ComputeEer(const ScoreSet &scores) {
  if (scores.genuine.empty() || scores.impostor.empty())
    Fail(ErrorKind::kInput, "EER needs at least one genuine and one impostor score");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(scores.genuine.begin(), scores.genuine.end(), finite) ||
      !std::all_of(scores.impostor.begin(), scores.impostor.end(), finite))
    Fail(ErrorKind::kInput, "EER scores must be finite");

  std::vector<double> gen = scores.genuine, imp = scores.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds(gen);
  thresholds.insert(thresholds.end(), imp.begin(), imp.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double ng = static_cast<double>(gen.size()), ni = static_cast<double>(imp.size());
  double prev_far = 1.0, prev_frr = 0.0;
  for (double t : thresholds) {
    const auto below_gen = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
    const auto below_imp = std::lower_bound(imp.begin(), imp.end(), t) - imp.begin();
    const double frr = static_cast<double>(below_gen) / ng;
    const double far = (ni - static_cast<double>(below_imp)) / ni;
    const double d = frr - far;
    if (d >= 0.0) {
      if (d == 0.0) return far;
      const double prev_d = prev_frr - prev_far;  // < 0
      const double a = -prev_d / (d - prev_d);
      return prev_far + a * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
  }
  return 0.5;  // unreachable: the last threshold has FRR = 1, FAR = 0
}

double CosineScore(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) Fail(ErrorKind::kDimension, "cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (!std::isfinite(dot) || !std::isfinite(na) || !std::isfinite(nb))
    Fail(ErrorKind::kInput, "cosine: non-finite input");
  if (na == 0.0 || nb == 0.0) Fail(ErrorKind::kInput, "cosine: zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double CosineScore(const SpeakerEmbedding &a, const SpeakerEmbedding &b) {
  return CosineScore(std::span<const float>(a.values), std::span<const float>(b.values));
}

ScoreSet ReadTrialList(const fs::path &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path.string());
  ScoreSet s;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (Trim(line).empty() || Trim(line)[0] == '#') continue;
    const auto cells = SplitCsv(line);
    if (lineno == 1 && cells.size() == 4 && cells[2] == "label") continue;  // header
    if (cells.size() != 4)
      Fail(ErrorKind::kFormat, path.string() + ":" + std::to_string(lineno) +
                                   ": expected enroll_id,test_id,label,score");
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error &) {
      Fail(ErrorKind::kFormat, path.string() + ":" + std::to_string(lineno) + ": bad score");
    }
    if (cells[2] == "genuine")
      s.genuine.push_back(score);
    else if (cells[2] == "impostor")
      s.impostor.push_back(score);
    else
      Fail(ErrorKind::kFormat, path.string() + ":" + std::to_string(lineno) +
                                   ": label must be genuine or impostor");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Probe

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> StratifiedSplit(
    std::span<const int64_t> labels, int64_t num_classes, double train_fraction,
    uint64_t seed) {
  if (num_classes < 2) Fail(ErrorKind::kData, "a probe needs at least 2 classes");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    Fail(ErrorKind::kConfig, "train_fraction must be in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      Fail(ErrorKind::kRange, "label " + std::to_string(labels[i]) + " out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<std::size_t> train, test;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto &members = by_class[c];
    if (members.size() < 2)
      Fail(ErrorKind::kData, "class " + std::to_string(c) + " has " +
                                 std::to_string(members.size()) +
                                 " examples; a probe split needs at least 2");
    Rng rng(MixSeed(seed, c));
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1],
                members[static_cast<std::size_t>(rng.UniformInt(0, static_cast<int64_t>(i) - 1))]);
    auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(members.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

namespace {

double Accuracy(Finder &probe, std::span<const FrameMatrix> reps,
                std::span<const int64_t> labels, const std::vector<std::size_t> &idx,
                int64_t batch_size) {
  torch::NoGradGuard no_grad;
  probe->eval();
  int64_t correct = 0;
  for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const FrameMatrix *> frames;
    for (std::size_t k = start; k < end; ++k) frames.push_back(&reps[idx[k]]);
    auto [x, mask] = PadFrames(frames);
    auto pred = probe->Logits(x, mask).argmax(1);
    for (std::size_t k = start; k < end; ++k)
      correct += pred[static_cast<int64_t>(k - start)].item<int64_t>() == labels[idx[k]];
  }
  probe->train();
  return idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

ProbeResult TrainProbe(std::span<const FrameMatrix> reps, std::span<const int64_t> labels,
                       int64_t num_classes, const ProbeConfig &cfg) {
  if (reps.size() != labels.size())
    Fail(ErrorKind::kDimension, "probe: representations and labels differ in count");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.lr > 0.0))
    Fail(ErrorKind::kConfig, "probe: epochs, batch_size and lr must be positive");
  for (const auto &r : reps) {
    if (r.cols() != kHiddenDim || r.rows() < 1)
      Fail(ErrorKind::kDimension, "probe: representations must be T x 80 with T >= 1");
    if (!std::all_of(r.data().begin(), r.data().end(), [](float v) { return std::isfinite(v); }))
      Fail(ErrorKind::kValidation, "probe: non-finite representation");
  }
  auto [train, test] = StratifiedSplit(labels, num_classes, cfg.train_fraction, cfg.seed);

  FinderConfig arch = cfg.architecture;
  arch.num_classes = num_classes;
  torch::manual_seed(MixSeed(cfg.seed, 0x9e0bedULL));
  Finder probe(arch);
  torch::optim::Adam opt(probe->parameters(), torch::optim::AdamOptions(cfg.lr));

  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (const auto &group : EpochBatches(train.size(), cfg.batch_size, cfg.seed, epoch)) {
      std::vector<const FrameMatrix *> frames;
      std::vector<int64_t> y;
      for (std::size_t k : group) {
        frames.push_back(&reps[train[k]]);
        y.push_back(labels[train[k]]);
      }
      auto [x, mask] = PadFrames(frames);
      opt.zero_grad();
      auto loss = torch::nn::functional::cross_entropy(probe->Logits(x, mask),
                                                       torch::tensor(y, torch::kInt64));
      loss.backward();
      opt.step();
    }
  }
  ProbeResult r;
  r.accuracy = Accuracy(probe, reps, labels, test, cfg.batch_size);
  r.train_accuracy = Accuracy(probe, reps, labels, train, cfg.batch_size);
  r.train_size = static_cast<int64_t>(train.size());
  r.test_size = static_cast<int64_t>(test.size());
  return r;
}

// ---------------------------------------------------------------------------
// Toy verification

std::vector<float> MeanFrame(const FrameMatrix &m) {
  if (m.rows() < 1) Fail(ErrorKind::kEmptyData, "mean of an empty matrix");
  std::vector<double> acc(static_cast<std::size_t>(m.cols()), 0.0);
  for (int64_t t = 0; t < m.rows(); ++t)
    for (int64_t f = 0; f < m.cols(); ++f) acc[static_cast<std::size_t>(f)] += m(t, f);
  std::vector<float> out(acc.size());
  for (std::size_t f = 0; f < acc.size(); ++f)
    out[f] = static_cast<float>(acc[f] / static_cast<double>(m.rows()));
  return out;
}

ScoreSet ToyVerificationScores(std::span<const FrameMatrix> enroll,
                               std::span<const int64_t> enroll_labels,
                               std::span<const FrameMatrix> tests,
                               std::span<const int64_t> test_labels) {
  if (enroll.size() != enroll_labels.size() || tests.size() != test_labels.size())
    Fail(ErrorKind::kDimension, "verification: features and labels differ in count");
  if (enroll.empty() || tests.empty()) Fail(ErrorKind::kInput, "verification: no trials");
  const std::size_t width = static_cast<std::size_t>(enroll[0].cols());

  // Speaker models are mean vectors, centred on the mean over speakers.
  std::map<int64_t, std::pair<std::vector<double>, int>> sums;
  for (std::size_t i = 0; i < enroll.size(); ++i) {
    auto &[sum, n] = sums[enroll_labels[i]];
    sum.resize(width, 0.0);
    const auto m = MeanFrame(enroll[i]);
    for (std::size_t f = 0; f < width; ++f) sum[f] += m[f];
    ++n;
  }
  std::vector<double> centre(width, 0.0);
  std::map<int64_t, std::vector<double>> models;
  for (auto &[label, sn] : sums) {
    std::vector<double> v(width);
    for (std::size_t f = 0; f < width; ++f) {
      v[f] = sn.first[f] / sn.second;
      centre[f] += v[f] / static_cast<double>(sums.size());
    }
    models[label] = std::move(v);
  }
  auto centred = [&](const std::vector<double> &v) {
    std::vector<float> out(width);
    for (std::size_t f = 0; f < width; ++f) out[f] = static_cast<float>(v[f] - centre[f]);
    return out;
  };
  std::map<int64_t, std::vector<float>> speaker_vec;
  for (auto &[label, v] : models) speaker_vec[label] = centred(v);

  ScoreSet s;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto m = MeanFrame(tests[i]);
    const auto test_vec = centred(std::vector<double>(m.begin(), m.end()));
    for (const auto &[label, v] : speaker_vec) {
      const double score = CosineScore(std::span<const float>(test_vec), std::span<const float>(v));
      (label == test_labels[i] ? s.genuine : s.impostor).push_back(score);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sweep

void SweepReport::WriteCsv(const fs::path &path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path.string());
  os << "beta,loss_combiner,loss_leakage,probe_acc,eer,diverged\n";
  for (const auto &r : rows) {
    os << FormatDouble(r.beta) << ',' << FormatDouble(r.loss_combiner) << ','
       << FormatDouble(r.loss_leakage) << ',' << (r.probe_acc ? FormatDouble(*r.probe_acc) : "")
       << ',' << (r.eer ? FormatDouble(*r.eer) : "") << ',' << (r.diverged ? 1 : 0) << '\n';
  }
}

SweepReport SweepReport::ReadCsv(const fs::path &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || Trim(line) != "beta,loss_combiner,loss_leakage,probe_acc,eer,diverged")
    Fail(ErrorKind::kFormat, path.string() + ": unexpected sweep header");
  SweepReport r;
  while (std::getline(is, line)) {
    if (Trim(line).empty()) continue;
    const auto c = SplitCsv(line);
    if (c.size() != 6) Fail(ErrorKind::kFormat, path.string() + ": bad row '" + line + "'");
    try {
      SweepRow row;
      row.beta = std::stod(c[0]);
      row.loss_combiner = std::stod(c[1]);
      row.loss_leakage = std::stod(c[2]);
      if (!c[3].empty()) row.probe_acc = std::stod(c[3]);
      if (!c[4].empty()) row.eer = std::stod(c[4]);
      row.diverged = c[5] == "1";
      r.rows.push_back(row);
    } catch (const std::logic_error &) {
      Fail(ErrorKind::kFormat, path.string() + ": bad number in '" + line + "'");
    }
  }
  return r;
}

nlohmann::json SweepReport::ToJson() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto &r : rows)
    rows_j.push_back({{"beta", r.beta},
                      {"loss_combiner", r.loss_combiner},
                      {"loss_leakage", r.loss_leakage},
                      {"probe_acc", r.probe_acc ? nlohmann::json(*r.probe_acc) : nlohmann::json()},
                      {"eer", r.eer ? nlohmann::json(*r.eer) : nlohmann::json()},
                      {"diverged", r.diverged}});
  return rows_j;
}

PrivacyMetrics MeasurePrivacy(Hider &hider, Combiner &combiner, const Dataset &dataset,
                              const ProbeConfig &probe, uint64_t seed, bool measure_probe,
                              bool measure_eer) {
  PrivacyMetrics out;
  std::vector<int64_t> labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) labels.push_back(dataset.record(i).label);
  const int64_t c = dataset.manifest().num_classes;
  if (measure_probe) {
    const auto hidden = ComputeHidden(hider, dataset);
    out.probe_acc = TrainProbe(hidden, labels, c, probe).accuracy;
  }
  if (measure_eer) {
    // Original enrollment, anonymised test utterances.
    auto [enroll_idx, test_idx] = StratifiedSplit(labels, c, 0.5, seed);
    TargetPolicy policy;
    policy.pool = ToyPool(64, seed);
    policy.seed = seed;
    const auto anon = AnonymiseDataset(dataset.Subset(test_idx), policy, hider, combiner);
    std::vector<FrameMatrix> enroll, tests;
    std::vector<int64_t> enroll_labels, test_labels;
    for (std::size_t i : enroll_idx) {
      enroll.push_back(dataset.features(i).frames);
      enroll_labels.push_back(labels[i]);
    }
    for (std::size_t k = 0; k < test_idx.size(); ++k) {
      tests.push_back(anon[k].frames);
      test_labels.push_back(labels[test_idx[k]]);
    }
    out.eer = ComputeEer(ToyVerificationScores(enroll, enroll_labels, tests, test_labels));
  }
  return out;
}

SweepReport RunSweep(std::span<const double> betas, const TrainConfig &base,
                     const NetworkConfig &networks, const Dataset &dataset,
                     const ClassPrior &prior, const SweepOptions &options) {
  if (betas.empty()) Fail(ErrorKind::kConfig, "sweep needs at least one beta");
  std::vector<double> sorted(betas.begin(), betas.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i] > 0.0 && sorted[i] <= 0.07))
      Fail(ErrorKind::kConfig, "sweep betas must lie in (0, 0.07]; got " + FormatDouble(sorted[i]));
    if (i > 0 && sorted[i] == sorted[i - 1])
      Fail(ErrorKind::kConfig, "duplicate beta " + FormatDouble(sorted[i]));
  }
  SweepReport report;
  for (double beta : sorted) {
    TrainConfig cfg = base;
    cfg.beta = beta;
    char name[48];
    std::snprintf(name, sizeof(name), "beta_%.6g", beta);
    RunOptions run;
    run.out_dir = options.out_dir / name;
    SweepRow row;
    row.beta = beta;
    try {
      RunResult result = RunTraining(cfg, networks, dataset, prior, run);
      row.loss_combiner = result.metrics.back().loss_combiner;
      row.loss_leakage = result.metrics.back().loss_leakage;
      if (options.measure_probe || options.measure_eer) {
        TrainState s = LoadCheckpoint(result.last_checkpoint);
        const auto m = MeasurePrivacy(s.hider, s.combiner, dataset, options.probe, cfg.seed,
                                      options.measure_probe, options.measure_eer);
        if (options.measure_probe) row.probe_acc = m.probe_acc;
        if (options.measure_eer) row.eer = m.eer;
      }
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kDivergence) throw;
      row.diverged = true;
      row.loss_combiner = std::numeric_limits<double>::quiet_NaN();
      row.loss_leakage = std::numeric_limits<double>::quiet_NaN();
    }
    report.rows.push_back(row);
    report.WriteCsv(options.out_dir / "sweep.csv");
  }
  return report;
}

}  // namespace hfcvp
