// cli/cli.cc

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

#include "hfcvp/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hfcvp/anonymise.h"
#include "hfcvp/checkpoint.h"
#include "hfcvp/dataset.h"
#include "hfcvp/eval.h"
#include "hfcvp/serialize.h"
#include "hfcvp/training.h"
#include "hfcvp/validate.h"

namespace hfcvp {

namespace fs = std::filesystem;

namespace {

constexpr double kStableBetaMax = 0.07;

void AddConfigOption(CLI::App *app) {
  app->add_option("--config")
      ->type_name("FILE")
      ->description("JSON file with default values for this command's flags");
}

bool FlagGiven(const std::vector<std::string> &args, std::size_t from, const std::string &flag) {
  for (std::size_t i = from; i < args.size(); ++i)
    if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
  return false;
}

// CLI11 only reads config files for the top-level app, so the --config of a
// subcommand is expanded here into flags.  Keys are flag names with '_' for
// '-'; a flag given on the command line wins over its key, and a key counts
// as given, so it also wins over an environment fallback.
std::vector<std::string> ExpandConfig(const CLI::App &app, std::vector<std::string> args) {
  const CLI::App *sub = &app;
  std::size_t i = 0;
  while (i < args.size()) {
    const CLI::App *next = sub->get_subcommand_no_throw(args[i]);
    if (next == nullptr) break;
    sub = next;
    ++i;
  }
  if (sub == &app) return args;
  std::string file;
  for (std::size_t k = i; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      file = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k),
                 args.begin() + static_cast<std::ptrdiff_t>(k + 2));
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      file = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  if (file.empty()) return args;

  nlohmann::json j;
  std::ifstream is(file);
  if (!is) Fail(ErrorKind::kConfig, "cannot read config file " + file);
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kConfig, file + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) Fail(ErrorKind::kConfig, file + " must hold a JSON object");

  auto scalar = [&](const std::string &key, const nlohmann::json &v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    Fail(ErrorKind::kConfig, "config key '" + key + "' must be a scalar or a list");
  };
  std::vector<std::string> extra;
  for (const auto &[key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const CLI::Option *opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || flag == "--config" || flag == "--help" || flag == "--help-all")
      Fail(ErrorKind::kConfig, "unknown config key '" + key + "' for " + sub->get_name());
    if (FlagGiven(args, i, flag)) continue;
    if (value.is_array()) {
      for (const auto &v : value) extra.push_back(flag + "=" + scalar(key, v));
    } else {
      extra.push_back(flag + "=" + scalar(key, value));
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(i), extra.begin(), extra.end());
  return args;
}

bool IsNonEmptyDir(const fs::path &p) {
  return fs::is_directory(p) && !fs::is_empty(p);
}

void RefuseClobber(const fs::path &p, bool force) {
  if (force) return;
  if (IsNonEmptyDir(p) || (fs::exists(p) && !fs::is_directory(p)))
    Fail(ErrorKind::kConfig, p.string() + " exists and is not empty (use --force to overwrite)");
}

NetworkConfig ResolveArch(const std::string &arch, const DatasetManifest &manifest) {
  std::string name = arch;
  if (name == "auto")
    name = manifest.provenance.value("generator", "") == "toy" ? "toy" : "full";
  return NetworkConfig::Preset(name, manifest.num_classes);
}

PriorMode ParsePriorMode(const std::string &s) {
  if (s == "normalized") return PriorMode::kNormalized;
  if (s == "literal-softmax") return PriorMode::kLiteralSoftmax;
  Fail(ErrorKind::kConfig, "unknown prior mode '" + s + "' (normalized|literal-softmax)");
}

// Flags shared by train and sweep.
struct TrainFlags {
  std::string data;
  std::string out;
  std::string arch = "auto";
  std::string loss_regime = "mse";
  std::string prior_mode = "normalized";
  TrainConfig cfg;
  bool force = false;
  bool json = false;
  bool quiet = false;
};

void AddTrainFlags(CLI::App *app, TrainFlags &f) {
  app->add_option("--data", f.data, "Dataset directory")->required();
  app->add_option("--out", f.out, "Output directory")->required();
  app->add_option("--arch", f.arch, "Network preset: auto, toy or full (auto = toy for toy corpora)")
      ->capture_default_str();
  app->add_option("--beta", f.cfg.beta, "Leakage weight in L_G")->capture_default_str();
  app->add_option("--lr-generator", f.cfg.lr_generator, "Hider+combiner learning rate")
      ->capture_default_str();
  app->add_option("--lr-finder", f.cfg.lr_finder, "Finder learning rate")->capture_default_str();
  app->add_option("--decay-gamma", f.cfg.decay_gamma, "Per-epoch learning-rate decay")
      ->capture_default_str();
  app->add_option("--decay-start-epoch", f.cfg.decay_start_epoch,
                  "Last epoch at the base learning rate")
      ->capture_default_str();
  app->add_option("--epochs", f.cfg.epochs, "Number of epochs")->capture_default_str();
  app->add_option("--batch-size", f.cfg.batch_size, "Batch size")->capture_default_str();
  app->add_option("--seed", f.cfg.seed, "Seed (falls back to $HFCVP_SEED)")
      ->envname("HFCVP_SEED")
      ->capture_default_str();
  app->add_option("--loss-regime", f.loss_regime, "mse or kl")->capture_default_str();
  app->add_option("--finder-steps-per-generator-step", f.cfg.finder_steps_per_generator_step,
                  "Finder updates per generator update")
      ->capture_default_str();
  app->add_option("--grad-clip-norm", f.cfg.grad_clip_norm, "Global gradient-norm clip (<= 0: off)")
      ->capture_default_str();
  app->add_option("--checkpoint-every", f.cfg.checkpoint_every, "Checkpoint cadence in epochs")
      ->capture_default_str();
  app->add_option("--probe-every", f.cfg.probe_every, "Probe cadence in epochs (0: never)")
      ->capture_default_str();
  app->add_option("--divergence-patience", f.cfg.divergence_patience,
                  "Consecutive non-finite losses before aborting")
      ->capture_default_str();
  app->add_option("--prior-mode", f.prior_mode, "normalized or literal-softmax")
      ->capture_default_str();
  app->add_flag("--force", f.force, "Overwrite a non-empty output directory");
  app->add_flag("--json", f.json, "Print a JSON summary on stdout");
  app->add_flag("--quiet", f.quiet, "No per-epoch progress on stderr");
}

void FinishTrainFlags(TrainFlags &f, std::ostream &err) {
  f.cfg.loss_regime = ParseLossRegime(f.loss_regime);
  ThrowIfInvalidConfig(Validate(f.cfg), "train config");
  if (f.cfg.beta > kStableBetaMax)
    err << "warning: beta " << f.cfg.beta << " is above " << kStableBetaMax
        << "; training is known to become unstable there\n";
}

ProbeConfig ProbeFor(const NetworkConfig &net, uint64_t seed) {
  ProbeConfig p;
  p.architecture = net.finder;
  p.seed = seed;
  return p;
}

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

int CmdGenToy(const ToyCorpusConfig &cfg, const std::string &out, bool force, bool json,
              std::ostream &os) {
  ThrowIfInvalidConfig(Validate(cfg), "toy corpus config");
  RefuseClobber(out, force);
  fs::create_directories(out);
  const DatasetManifest m = GenerateToyCorpus(cfg, out);
  if (json) {
    os << nlohmann::json{{"out", out},
                         {"utterances", m.records.size()},
                         {"num_classes", m.num_classes},
                         {"class_counts", m.class_counts}}
              .dump()
       << "\n";
  } else {
    os << "wrote " << m.records.size() << " utterances, " << m.num_classes << " classes to "
       << out << "\n";
  }
  return 0;
}

int CmdPrior(const std::string &data, const std::string &mode, const std::string &out,
             bool force, bool json, std::ostream &os) {
  const DatasetManifest m = LoadManifest(data);
  const auto labels = m.Labels();
  const ClassPrior prior = EstimatePrior(labels, m.num_classes, ParsePriorMode(mode));
  if (!out.empty()) {
    RefuseClobber(out, force);
    WriteJsonFile(out, nlohmann::json(prior));
  }
  if (json) {
    os << nlohmann::json(prior).dump() << "\n";
  } else {
    for (std::size_t c = 0; c < prior.probs.size(); ++c)
      os << (c ? " " : "") << Fixed(prior.probs[c]);
    os << "\n";
  }
  return 0;
}

int CmdTrain(TrainFlags &f, const std::string &resume, std::ostream &os, std::ostream &err) {
  FinishTrainFlags(f, err);
  if (resume.empty()) RefuseClobber(f.out, f.force);
  const Dataset dataset = Dataset::Load(f.data);
  const NetworkConfig net = ResolveArch(f.arch, dataset.manifest());
  const auto labels = dataset.manifest().Labels();
  const ClassPrior prior =
      EstimatePrior(labels, dataset.manifest().num_classes, ParsePriorMode(f.prior_mode));

  fs::create_directories(f.out);
  WriteJsonFile(fs::path(f.out) / "run.json",
                {{"train_config", f.cfg},
                 {"networks", net},
                 {"data", fs::absolute(f.data).string()},
                 {"prior", prior}});

  RunOptions opts;
  opts.out_dir = f.out;
  if (!resume.empty()) opts.resume_from = fs::path(resume);
  if (f.cfg.probe_every > 0) {
    opts.probe = [&](TrainState &s) {
      const auto hidden = ComputeHidden(s.hider, dataset);
      std::vector<int64_t> y;
      for (const auto &l : labels) y.push_back(l.class_index);
      return TrainProbe(hidden, y, dataset.manifest().num_classes, ProbeFor(net, f.cfg.seed))
          .accuracy;
    };
  }
  if (!f.quiet) {
    opts.on_epoch = [&](const EpochMetrics &m) {
      err << "epoch " << m.epoch << "  L_combiner " << Fixed(m.loss_combiner) << "  L_leakage "
          << Fixed(m.loss_leakage) << "  L_finder " << Fixed(m.loss_finder);
      if (m.probe_acc) err << "  probe " << Fixed(*m.probe_acc, 4);
      err << "\n";
    };
  }
  const RunResult r = RunTraining(f.cfg, net, dataset, prior, opts);
  const EpochMetrics &last = r.metrics.back();
  if (f.json) {
    os << nlohmann::json{{"out", f.out},
                         {"epochs", last.epoch},
                         {"final", last},
                         {"last_checkpoint", r.last_checkpoint.string()},
                         {"best_checkpoint", r.best_checkpoint.string()}}
              .dump()
       << "\n";
  } else {
    os << "trained " << last.epoch << " epochs; L_combiner " << Fixed(last.loss_combiner)
       << ", L_leakage " << Fixed(last.loss_leakage) << "; checkpoint "
       << r.last_checkpoint.string() << "\n";
  }
  return 0;
}

struct AnonymiseFlags {
  std::string checkpoint, in, out, policy = "utterance-random", pool = "toy:64", fixed_target;
  uint64_t seed = 0;
  bool export_hidden = false, force = false, json = false;
};

int CmdAnonymise(const AnonymiseFlags &f, std::ostream &os) {
  RefuseClobber(f.out, f.force);
  TargetPolicy policy;
  policy.mode = ParseTargetMode(f.policy);
  policy.seed = f.seed;
  policy.pool = PoolFromSpec(f.pool, f.seed);
  policy.fixed_id = f.fixed_target;
  AnonymiseOptions opt;
  opt.export_hidden = f.export_hidden;
  const AnonymiseReport report = AnonymiseCorpus(f.in, policy, f.checkpoint, f.out, opt);
  const auto ok = static_cast<int64_t>(report.rows.size()) - report.failures;
  if (f.json) {
    os << nlohmann::json{{"out", f.out},
                         {"utterances", report.rows.size()},
                         {"written", ok},
                         {"failures", report.failures},
                         {"report", (fs::path(f.out) / "mapping.csv").string()}}
              .dump()
       << "\n";
  } else {
    os << "anonymised " << ok << " of " << report.rows.size() << " utterances into " << f.out
       << " (policy " << TargetModeName(policy.mode) << ", pool of " << policy.pool.size()
       << ")\n";
  }
  return report.failures > 0 ? 3 : 0;
}

int CmdEvalEer(const std::string &trials, bool json, std::ostream &os) {
  const ScoreSet s = ReadTrialList(trials);
  const double eer = ComputeEer(s);
  if (json)
    os << nlohmann::json{{"eer", eer}, {"genuine", s.genuine.size()}, {"impostor", s.impostor.size()}}
              .dump()
       << "\n";
  else
    os << Fixed(eer) << "\n";
  return 0;
}

struct ProbeFlags {
  std::string reps, labels, arch = "auto";
  int64_t epochs = 15, batch_size = 32;
  double lr = 1e-3;
  uint64_t seed = 0;
  bool json = false;
};

int CmdEvalProbe(const ProbeFlags &f, std::ostream &os) {
  fs::path manifest_path = f.labels;
  if (fs::is_directory(manifest_path)) manifest_path /= "manifest.json";
  auto manifest = ReadJsonFile(manifest_path).get<DatasetManifest>();
  ThrowIfInvalid(Validate(manifest), manifest_path.string());
  const fs::path reps_root = f.reps;
  std::vector<FrameMatrix> reps;
  std::vector<int64_t> y;
  for (const auto &rec : manifest.records) {
    fs::path p = reps_root / (rec.id + ".bin");
    if (!fs::exists(p)) p = reps_root / rec.features;
    if (!fs::exists(p))
      Fail(ErrorKind::kData, "no representation for " + rec.id + " under " + reps_root.string());
    reps.push_back(LoadMatrix(p));
    y.push_back(rec.label);
  }
  ProbeConfig cfg = ProbeFor(ResolveArch(f.arch, manifest), f.seed);
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch_size;
  cfg.lr = f.lr;
  const ProbeResult r = TrainProbe(reps, y, manifest.num_classes, cfg);
  if (f.json)
    os << nlohmann::json{{"accuracy", r.accuracy},
                         {"train_accuracy", r.train_accuracy},
                         {"train_size", r.train_size},
                         {"test_size", r.test_size},
                         {"chance", 1.0 / static_cast<double>(manifest.num_classes)}}
              .dump()
       << "\n";
  else
    os << Fixed(r.accuracy, 4) << "\n";
  return 0;
}

int CmdSweep(TrainFlags &f, const std::vector<double> &betas, bool no_probe, bool no_eer,
             std::ostream &os, std::ostream &err) {
  FinishTrainFlags(f, err);
  RefuseClobber(f.out, f.force);
  const Dataset dataset = Dataset::Load(f.data);
  const NetworkConfig net = ResolveArch(f.arch, dataset.manifest());
  const auto labels = dataset.manifest().Labels();
  const ClassPrior prior =
      EstimatePrior(labels, dataset.manifest().num_classes, ParsePriorMode(f.prior_mode));
  SweepOptions opt;
  opt.out_dir = f.out;
  opt.measure_probe = !no_probe;
  opt.measure_eer = !no_eer;
  opt.probe = ProbeFor(net, f.cfg.seed);
  fs::create_directories(f.out);
  const SweepReport report = RunSweep(betas, f.cfg, net, dataset, prior, opt);
  if (f.json) {
    os << report.ToJson().dump() << "\n";
  } else {
    std::ifstream is(fs::path(f.out) / "sweep.csv");
    os << is.rdbuf();
  }
  return 0;
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 1;
    case ErrorKind::kIo:
    case ErrorKind::kLoad:
    case ErrorKind::kDivergence:
      return 2;
    case ErrorKind::kRange:
    case ErrorKind::kDimension:
    case ErrorKind::kValidation:
    case ErrorKind::kEmptyData:
    case ErrorKind::kFormat:
    case ErrorKind::kRate:
    case ErrorKind::kInput:
    case ErrorKind::kData:
      return 3;
  }
  return 2;
}

int RunCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Speaker-identity hiding for voice privacy: training, anonymisation, evaluation",
               "hfcvp"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // gen-toy
  ToyCorpusConfig toy;
  std::string toy_out;
  bool toy_force = false, toy_json = false;
  auto *gen = app.add_subcommand("gen-toy", "Generate the synthetic multi-speaker corpus");
  AddConfigOption(gen);
  gen->add_option("--out", toy_out, "Output dataset directory")->required();
  gen->add_option("--classes", toy.num_classes, "Number of speakers")->capture_default_str();
  gen->add_option("--utterances-per-class", toy.utterances_per_class, "Utterances per speaker")
      ->capture_default_str();
  gen->add_option("--min-frames", toy.min_frames, "Shortest utterance")->capture_default_str();
  gen->add_option("--max-frames", toy.max_frames, "Longest utterance")->capture_default_str();
  gen->add_option("--content-units", toy.content_units, "Size of the shared content inventory")
      ->capture_default_str();
  gen->add_option("--content-noise", toy.content_noise, "Per-cell noise level")
      ->capture_default_str();
  gen->add_option("--feature-scale", toy.feature_scale, "Global feature scale")
      ->capture_default_str();
  gen->add_option("--seed", toy.seed, "Corpus seed (falls back to $HFCVP_SEED)")
      ->envname("HFCVP_SEED")
      ->capture_default_str();
  gen->add_option("--embedding-seed", toy.embedding_seed, "Seed of the toy speaker embeddings")
      ->capture_default_str();
  gen->add_flag("--force", toy_force, "Overwrite a non-empty output directory");
  gen->add_flag("--json", toy_json, "Print a JSON summary on stdout");

  // prior
  std::string prior_data, prior_mode = "normalized", prior_out;
  bool prior_force = false, prior_json = false;
  auto *pri = app.add_subcommand("prior", "Estimate the class prior of a dataset");
  AddConfigOption(pri);
  pri->add_option("--data", prior_data, "Dataset directory")->required();
  pri->add_option("--mode", prior_mode, "normalized or literal-softmax")->capture_default_str();
  pri->add_option("--out", prior_out, "Also write the prior as JSON to this file");
  pri->add_flag("--force", prior_force, "Overwrite --out if it exists");
  pri->add_flag("--json", prior_json, "Print JSON on stdout");

  // train
  TrainFlags train_flags;
  std::string resume;
  auto *trn = app.add_subcommand("train", "Adversarial training of hider, combiner and finder");
  AddConfigOption(trn);
  AddTrainFlags(trn, train_flags);
  trn->add_option("--resume", resume, "Checkpoint directory to resume from");

  // anonymise
  AnonymiseFlags an;
  auto *ano = app.add_subcommand("anonymise", "Anonymise every utterance of a dataset");
  AddConfigOption(ano);
  ano->add_option("--checkpoint", an.checkpoint, "Checkpoint directory")->required();
  ano->add_option("--in", an.in, "Input dataset directory")->required();
  ano->add_option("--out", an.out, "Output directory")->required();
  ano->add_option("--policy", an.policy,
                  "utterance-random, fixed-target or speaker-consistent-random")
      ->capture_default_str();
  ano->add_option("--pool", an.pool, "Target pool: a directory of embeddings or toy:N")
      ->capture_default_str();
  ano->add_option("--fixed-target", an.fixed_target, "Pool id for the fixed-target policy");
  ano->add_option("--seed", an.seed, "Target-selection seed (falls back to $HFCVP_SEED)")
      ->envname("HFCVP_SEED")
      ->capture_default_str();
  ano->add_flag("--export-hidden", an.export_hidden, "Also write hidden representations");
  ano->add_flag("--force", an.force, "Write into a non-empty output directory");
  ano->add_flag("--json", an.json, "Print a JSON summary on stdout");

  // eval
  auto *ev = app.add_subcommand("eval", "Privacy metrics");
  ev->require_subcommand(1);
  std::string trials;
  bool eer_json = false;
  auto *eer = ev->add_subcommand("eer", "Equal error rate of a trial list");
  AddConfigOption(eer);
  eer->add_option("--trials", trials, "CSV enroll_id,test_id,label,score")->required();
  eer->add_flag("--json", eer_json, "Print JSON on stdout");

  ProbeFlags pf;
  auto *prb = ev->add_subcommand("probe", "Held-out accuracy of a fresh classifier");
  AddConfigOption(prb);
  prb->add_option("--reps", pf.reps, "Directory of <utterance_id>.bin representations")
      ->required();
  prb->add_option("--labels", pf.labels, "Manifest (file or dataset directory)")->required();
  prb->add_option("--arch", pf.arch, "Classifier preset: auto, toy or full")
      ->capture_default_str();
  prb->add_option("--epochs", pf.epochs, "Training epochs")->capture_default_str();
  prb->add_option("--batch-size", pf.batch_size, "Batch size")->capture_default_str();
  prb->add_option("--lr", pf.lr, "Learning rate")->capture_default_str();
  prb->add_option("--seed", pf.seed, "Split and initialisation seed (falls back to $HFCVP_SEED)")
      ->envname("HFCVP_SEED")
      ->capture_default_str();
  prb->add_flag("--json", pf.json, "Print JSON on stdout");

  // sweep
  TrainFlags sweep_flags;
  std::vector<double> betas = {0.05, 0.06, 0.065, 0.07};
  bool no_probe = false, no_eer = false;
  auto *swp = app.add_subcommand("sweep", "One training run per beta, tabulated");
  AddConfigOption(swp);
  AddTrainFlags(swp, sweep_flags);
  swp->add_option("--betas", betas, "Comma-separated betas in (0, 0.07]")
      ->delimiter(',')
      ->capture_default_str();
  swp->add_flag("--no-probe", no_probe, "Skip the probe on h");
  swp->add_flag("--no-eer", no_eer, "Skip the toy-verifier EER");

  std::vector<std::string> args;
  try {
    args = ExpandConfig(app, std::vector<std::string>(argv + std::min(argc, 1), argv + argc));
  } catch (const Error &e) {
    err << "error (" << ErrorKindName(e.kind()) << "): " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  }
  try {
    // CLI11 consumes a vector from the back.
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return CmdGenToy(toy, toy_out, toy_force, toy_json, out);
    if (*pri) return CmdPrior(prior_data, prior_mode, prior_out, prior_force, prior_json, out);
    if (*trn) return CmdTrain(train_flags, resume, out, err);
    if (*ano) return CmdAnonymise(an, out);
    if (*eer) return CmdEvalEer(trials, eer_json, out);
    if (*prb) return CmdEvalProbe(pf, out);
    if (*swp) return CmdSweep(sweep_flags, betas, no_probe, no_eer, out, err);
  } catch (const Error &e) {
    err << "error (" << ErrorKindName(e.kind()) << "): " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const c10::Error &e) {
    err << "error (tensor): " << e.what_without_backtrace() << "\n";
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace hfcvp
