// Copyright 2026 The mbcl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "mbcl/config.h"
#include "mbcl/errors.h"
#include "mbcl/evaluation.h"
#include "mbcl/experiment.h"
#include "mbcl/losses.h"
#include "mbcl/synthetic.h"
#include "mbcl/training.h"

namespace py = pybind11;

namespace mbcl {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::string ToConfigValue(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
  if (py::isinstance<py::str>(v)) return v.cast<std::string>();
  if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
    std::string out;
    for (const py::handle& item : v) {
      out += (out.empty() ? "" : ",") + ToConfigValue(item);
    }
    return out;
  }
  return py::repr(v).cast<std::string>();
}

RunConfig MakeConfig(const py::dict& overrides) {
  RunConfig config;
  for (const auto& [key, value] : overrides) {
    SetConfigValue(config, key.cast<std::string>(), ToConfigValue(value));
  }
  config.Validate();
  return config;
}

py::dict MetricsDict(const Metrics& m) {
  py::dict d;
  const auto values = MetricValues(m);
  for (size_t i = 0; i < values.size(); ++i) d[kMetricNames[i]] = values[i];
  d["users"] = m.users;
  return d;
}

Tensor ToTensor(const Array& a) {
  if (a.ndim() == 1) {
    return Tensor({size_t(a.shape(0))}, std::vector<real>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() == 2) {
    return Tensor({size_t(a.shape(0)), size_t(a.shape(1))},
                  std::vector<real>(a.data(), a.data() + a.size()));
  }
  throw DimensionError("expected a 1-D or 2-D array");
}

double LossValue(const std::function<Var(Tape&)>& build) {
  Tape tape(false);
  return build(tape).item();
}

py::dict PyGenerate(const py::dict& overrides) {
  const RunConfig config = MakeConfig(overrides);
  GenConfig gen = config.gen;
  gen.schema = config.schema;
  const GeneratedData g = mbcl::Generate(gen);
  const size_t n = g.log.records.size();
  py::array_t<uint32_t> users(n), items(n), behaviors(n);
  py::array_t<int64_t> timestamps(n);
  auto u = users.mutable_unchecked<1>();
  auto v = items.mutable_unchecked<1>();
  auto b = behaviors.mutable_unchecked<1>();
  auto t = timestamps.mutable_unchecked<1>();
  for (size_t i = 0; i < n; ++i) {
    const Interaction& r = g.log.records[i];
    u(i) = r.user;
    v(i) = r.item;
    b(i) = r.behavior;
    t(i) = r.timestamp;
  }
  py::dict out;
  out["user"] = users;
  out["item"] = items;
  out["behavior"] = behaviors;
  out["timestamp"] = timestamps;
  out["user_labels"] = g.log.user_labels;
  out["item_labels"] = g.log.item_labels;
  out["behaviors"] = g.log.schema.labels;
  out["thresholds"] = g.thresholds;
  return out;
}

py::dict PyTrain(const py::dict& overrides, const std::string& run_dir) {
  RunConfig config = MakeConfig(overrides);
  ExperimentResult result;
  {
    py::gil_scoped_release release;
    const InteractionLog log = LoadOrGenerateLog(config);
    const PreparedData data = PrepareData(config, log);
    TrainHooks hooks;
    hooks.run_dir = run_dir;
    hooks.config_echo = ConfigMap(config);
    result = RunExperiment(config.model, config.train, data, hooks);
  }
  py::list history;
  for (const EpochRecord& e : result.train.history) history.append(e.ToJson(false));
  py::dict out;
  out["history"] = history;
  out["best_epoch"] = result.train.best_epoch;
  out["best_valid_ndcg10"] = result.train.best_valid_ndcg10;
  out["stopped_early"] = result.train.stopped_early;
  out["test"] = MetricsDict(result.test);
  out["test_cold"] = result.test_cold ? py::object(MetricsDict(*result.test_cold))
                                      : py::object(py::none());
  out["config"] = ConfigMap(config);
  return out;
}

py::list PyAblate(const py::dict& overrides) {
  const RunConfig config = MakeConfig(overrides);
  std::vector<RunRecord> records;
  {
    py::gil_scoped_release release;
    records = RunAblation(config);
  }
  py::list out;
  for (const RunRecord& r : records) {
    py::dict row;
    row["label"] = r.label;
    row["seed"] = r.seed;
    row["test"] = MetricsDict(r.test);
    row["test_cold"] = r.test_cold ? py::object(MetricsDict(*r.test_cold))
                                   : py::object(py::none());
    row["best_epoch"] = r.best_epoch;
    out.append(row);
  }
  return out;
}

py::dict PyCheckGradients(uint64_t seed, double tolerance, const std::string& components) {
  ToyProblem toy = MakeToyProblem(seed);
  toy.model.components = Components::Parse(components);
  GradCheckReport report;
  {
    py::gil_scoped_release release;
    report = CheckModelGradients(toy, tolerance);
  }
  py::dict out;
  out["passed"] = report.passed;
  out["max_error"] = report.max_error;
  out["checked"] = report.checked;
  out["refined"] = report.refined;
  out["summary"] = report.Summary();
  return out;
}

}  // namespace
}  // namespace mbcl

PYBIND11_MODULE(_mbcl, m) {
  using namespace mbcl;
  m.doc() = "Multi-behavior contrastive recommendation core";

  auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<IndexError>(m, "IndexError", base.ptr());
  py::register_exception<VerificationError>(m, "VerificationError", base.ptr());

  m.def("config_keys", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const ConfigKey& k : ConfigKeys()) out.emplace_back(k.name, k.help);
    return out;
  });
  m.def("resolve_config", [](const py::dict& overrides) { return ConfigMap(MakeConfig(overrides)); },
        py::arg("overrides") = py::dict());
  m.def("generate", &PyGenerate, py::arg("overrides") = py::dict());
  m.def("train", &PyTrain, py::arg("overrides") = py::dict(), py::arg("run_dir") = "");
  m.def("ablate", &PyAblate, py::arg("overrides") = py::dict());
  m.def("check_gradients", &PyCheckGradients, py::arg("seed") = 7, py::arg("tolerance") = 1e-4,
        py::arg("components") = "full");

  m.def("pessimistic_rank", [](double positive, const std::vector<double>& negatives) {
    return PessimisticRank(positive, negatives);
  });
  m.def(
      "compute_metrics",
      [](const std::vector<size_t>& ranks, size_t num_negatives) {
        return MetricsDict(ComputeMetrics(ranks, num_negatives));
      },
      py::arg("ranks"), py::arg("num_negatives") = 99);

  m.def("pairwise_f", [](const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& z) { return PairwiseF(x, y, z); });
  m.def("bpr_loss", [](const Array& pos, const Array& neg) {
    return LossValue([&](Tape& t) {
      return loss::Bpr(t.Constant(ToTensor(pos)), t.Constant(ToTensor(neg)));
    });
  });
  m.def("contrast_loss", [](const Array& anchors, const Array& positives) {
    return LossValue([&](Tape& t) {
      return loss::Contrast(t.Constant(ToTensor(anchors)), t.Constant(ToTensor(positives)));
    });
  });
  m.def(
      "distinction_loss",
      [](const Array& u, const Array& vi, const Array& vj, const Array& vk, double beta) {
        return LossValue([&](Tape& t) {
          return loss::Distinction(t.Constant(ToTensor(u)), t.Constant(ToTensor(vi)),
                                   t.Constant(ToTensor(vj)), t.Constant(ToTensor(vk)), beta);
        });
      },
      py::arg("u"), py::arg("vi"), py::arg("vj"), py::arg("vk"), py::arg("beta") = 1.0);
}
