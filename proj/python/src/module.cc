// python/src/module.cc

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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "hfcvp/anonymise.h"
#include "hfcvp/audio.h"
#include "hfcvp/cli.h"
#include "hfcvp/dataset.h"
#include "hfcvp/eval.h"
#include "hfcvp/losses.h"
#include "hfcvp/networks.h"
#include "hfcvp/serialize.h"
#include "hfcvp/training.h"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace hfcvp;

namespace {

py::object *g_error = nullptr;

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

FloatArray ToNumpy(const FrameMatrix &m) {
  FloatArray a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

FrameMatrix FromNumpy(const FloatArray &a) {
  if (a.ndim() != 2) Fail(ErrorKind::kDimension, "expected a 2-D array");
  return FrameMatrix(a.shape(0), a.shape(1),
                     std::vector<float>(a.data(), a.data() + a.size()));
}

py::object ToPython(const nlohmann::json &j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json FromPython(const py::object &o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

PriorMode ParseMode(const std::string &mode) {
  if (mode == "normalized") return PriorMode::kNormalized;
  if (mode == "literal-softmax") return PriorMode::kLiteralSoftmax;
  Fail(ErrorKind::kConfig, "unknown prior mode '" + mode + "'");
}

std::vector<SpeakerLabel> Labels(const std::vector<int64_t> &y) {
  std::vector<SpeakerLabel> out;
  for (int64_t v : y) out.push_back(SpeakerLabel{v});
  return out;
}

NetworkConfig ArchFor(const std::string &arch, const DatasetManifest &manifest) {
  if (arch != "auto") return NetworkConfig::Preset(arch, manifest.num_classes);
  return NetworkConfig::Preset(
      manifest.provenance.value("generator", "") == "toy" ? "toy" : "full", manifest.num_classes);
}

py::dict ParameterCounts(const std::string &arch, int64_t num_classes) {
  const NetworkConfig c = NetworkConfig::Preset(arch, num_classes);
  py::dict d;
  d["hider"] = CountParameters(*Hider(c.hider));
  d["finder"] = CountParameters(*Finder(c.finder));
  d["combiner"] = CountParameters(*Combiner(c.combiner));
  return d;
}

int64_t GenerateToy(const fs::path &out, int64_t num_classes, int64_t utterances_per_class,
                    int64_t min_frames, int64_t max_frames, double feature_scale, uint64_t seed) {
  ToyCorpusConfig cfg;
  cfg.num_classes = num_classes;
  cfg.utterances_per_class = utterances_per_class;
  cfg.min_frames = min_frames;
  cfg.max_frames = max_frames;
  cfg.feature_scale = feature_scale;
  cfg.seed = seed;
  ThrowIfInvalidConfig(Validate(cfg), "toy corpus config");
  fs::create_directories(out);
  py::gil_scoped_release release;
  return static_cast<int64_t>(GenerateToyCorpus(cfg, out).records.size());
}

py::object Train(const fs::path &data, const fs::path &out, const py::object &config,
                 const std::string &arch) {
  const TrainConfig cfg = FromPython(config).get<TrainConfig>();
  ThrowIfInvalidConfig(Validate(cfg), "train config");
  nlohmann::json log;
  {
    py::gil_scoped_release release;
    const Dataset dataset = Dataset::Load(data);
    const ClassPrior prior =
        EstimatePrior(dataset.manifest().Labels(), dataset.manifest().num_classes);
    RunOptions opts;
    opts.out_dir = out;
    log = RunTraining(cfg, ArchFor(arch, dataset.manifest()), dataset, prior, opts)
              .metrics.ToJson();
  }
  return ToPython(log);
}

py::dict Anonymise(const fs::path &checkpoint, const fs::path &in, const fs::path &out,
                   const std::string &policy, const std::string &pool, uint64_t seed,
                   bool export_hidden) {
  TargetPolicy p;
  p.mode = ParseTargetMode(policy);
  p.seed = seed;
  p.pool = PoolFromSpec(pool, seed);
  AnonymiseOptions opt;
  opt.export_hidden = export_hidden;
  AnonymiseReport report;
  {
    py::gil_scoped_release release;
    report = AnonymiseCorpus(in, p, checkpoint, out, opt);
  }
  py::dict d;
  d["utterances"] = report.rows.size();
  d["failures"] = report.failures;
  return d;
}

py::dict Probe(const std::vector<FloatArray> &reps, const std::vector<int64_t> &labels,
               int64_t num_classes, const std::string &arch, int64_t epochs, uint64_t seed) {
  std::vector<FrameMatrix> m;
  for (const auto &a : reps) m.push_back(FromNumpy(a));
  ProbeConfig cfg;
  cfg.architecture = NetworkConfig::Preset(arch, num_classes).finder;
  cfg.epochs = epochs;
  cfg.seed = seed;
  ProbeResult r;
  {
    py::gil_scoped_release release;
    r = TrainProbe(m, labels, num_classes, cfg);
  }
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["train_accuracy"] = r.train_accuracy;
  d["train_size"] = r.train_size;
  d["test_size"] = r.test_size;
  return d;
}

py::tuple RunCliPy(const std::vector<std::string> &args) {
  std::vector<const char *> argv{"hfcvp"};
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_hfcvp, m) {
  m.doc() = "Speaker-identity hiding for voice privacy";

  // Leaked on purpose: the type must outlive interpreter shutdown.
  g_error = new py::object(py::exception<Error>(m, "Error", PyExc_RuntimeError));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error &e) {
      py::object exc = (*g_error)(e.what());
      exc.attr("kind") = ErrorKindName(e.kind());
      py::set_error(*g_error, exc);
    }
  });

  m.def("leakage_mse", [](const std::vector<double> &f, const std::vector<double> &prior) {
    return LeakageMse(ClassDistribution{f}, ClassPrior{prior, {}});
  }, py::arg("f"), py::arg("prior"));
  m.def("leakage_kl", [](const std::vector<double> &f, const std::vector<double> &prior) {
    return LeakageKl(ClassDistribution{f}, ClassPrior{prior, {}});
  }, py::arg("f"), py::arg("prior"));
  m.def("finder_mse", [](const std::vector<double> &f, int64_t label) {
    return FinderMse(ClassDistribution{f},
                     OneHot(SpeakerLabel{label}, static_cast<int64_t>(f.size())));
  }, py::arg("f"), py::arg("label"));
  m.def("finder_kl", [](const std::vector<double> &f, int64_t label) {
    return FinderKl(ClassDistribution{f}, SpeakerLabel{label});
  }, py::arg("f"), py::arg("label"));
  m.def("generator_total", &GeneratorTotal, py::arg("recon"), py::arg("leakage"),
        py::arg("beta"));

  m.def("estimate_prior", [](const std::vector<int64_t> &labels, int64_t num_classes,
                             const std::string &mode) {
    return EstimatePrior(Labels(labels), num_classes, ParseMode(mode)).probs;
  }, py::arg("labels"), py::arg("num_classes"), py::arg("mode") = "normalized");

  m.def("compute_eer", [](std::vector<double> genuine, std::vector<double> impostor) {
    return ComputeEer(ScoreSet{std::move(genuine), std::move(impostor)});
  }, py::arg("genuine"), py::arg("impostor"));
  m.def("cosine_score", [](const std::vector<float> &a, const std::vector<float> &b) {
    return CosineScore(a, b);
  }, py::arg("a"), py::arg("b"));

  m.def("compute_mel", [](const std::vector<float> &samples, int sample_rate) {
    FeatureConfig cfg;
    cfg.sample_rate_hz = sample_rate;
    return ToNumpy(ComputeMel(Waveform{sample_rate, samples}, cfg).frames);
  }, py::arg("samples"), py::arg("sample_rate") = kDefaultSampleRate);
  m.def("load_matrix", [](const fs::path &p) { return ToNumpy(LoadMatrix(p)); },
        py::arg("path"));
  m.def("save_matrix", [](const fs::path &p, const FloatArray &a) {
    SaveMatrix(p, FromNumpy(a));
  }, py::arg("path"), py::arg("matrix"));

  m.def("parameter_counts", &ParameterCounts, py::arg("arch") = "full",
        py::arg("num_classes") = 904);
  m.def("generate_toy_corpus", &GenerateToy, py::arg("out"), py::arg("num_classes") = 8,
        py::arg("utterances_per_class") = 100, py::arg("min_frames") = 40,
        py::arg("max_frames") = 120, py::arg("feature_scale") = ToyCorpusConfig{}.feature_scale,
        py::arg("seed") = 7);
  m.def("train", &Train, py::arg("data"), py::arg("out"), py::arg("config") = py::dict(),
        py::arg("arch") = "auto",
        "Trains to config['epochs'] and returns the per-epoch metrics.");
  m.def("anonymise", &Anonymise, py::arg("checkpoint"), py::arg("data"), py::arg("out"),
        py::arg("policy") = "utterance-random", py::arg("pool") = "toy:64",
        py::arg("seed") = 0, py::arg("export_hidden") = false);
  m.def("train_probe", &Probe, py::arg("representations"), py::arg("labels"),
        py::arg("num_classes"), py::arg("arch") = "toy", py::arg("epochs") = 15,
        py::arg("seed") = 0);
  m.def("run_cli", &RunCliPy, py::arg("args"),
        "Runs the hfcvp command line; returns (exit_code, stdout, stderr).");
}
