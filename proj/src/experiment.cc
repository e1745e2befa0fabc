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

#include "mbcl/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mbcl/errors.h"

namespace mbcl {

InteractionLog LoadOrGenerateLog(const RunConfig& config, const WarningSink& warn) {
  if (!config.data_log.empty()) {
    LoadOptions options;
    options.min_user_interactions = config.min_user_interactions;
    options.min_item_interactions = config.min_item_interactions;
    return LoadLog(config.data_log, config.schema, options);
  }
  GenConfig gen = config.gen;
  gen.schema = config.schema;
  return Generate(gen, warn).log;
}

PreparedData PrepareData(const RunConfig& config, const InteractionLog& log) {
  if (config.data_splits.empty()) {
    return BuildSplits(log, config.model.max_seq_len, config.split_seed,
                       config.num_negatives);
  }
  SplitSpec split = SplitSpec::Load(config.data_splits);
  if (split.users.size() != log.num_users()) {
    throw SchemaError("split file " + config.data_splits + " covers " +
                      std::to_string(split.users.size()) + " users but the log has " +
                      std::to_string(log.num_users()));
  }
  return Materialize(log, split, config.model.max_seq_len);
}

RunConfig Replicate(const RunConfig& config, size_t index) {
  RunConfig r = config;
  r.train.seed += index;
  if (config.data_log.empty()) {
    r.gen.seed += index;
    r.split_seed += index;
  }
  return r;
}

namespace {

RunRecord RunOnce(const RunConfig& config, const PreparedData& data,
                  const std::string& label) {
  const ExperimentResult result = RunExperiment(config.model, config.train, data);
  RunRecord rec;
  rec.label = label;
  rec.seed = config.train.seed;
  rec.test = result.test;
  rec.test_cold = result.test_cold;
  rec.best_epoch = result.train.best_epoch;
  return rec;
}

std::string Brief(const RunRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-24s seed %-4llu NDCG@10 %.4f HIT@10 %.4f best epoch %zu",
                r.label.c_str(), static_cast<unsigned long long>(r.seed), r.test.ndcg10,
                r.test.hit10, r.best_epoch);
  return buf;
}

std::string FormatValue(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

}  // namespace

std::vector<RunRecord> RunAblation(const RunConfig& config, const ProgressSink& progress) {
  std::vector<AblationSpec> specs;
  for (const AblationSpec& s : AblationConfigurations()) {
    bool wanted = config.ablate_configs.empty();
    for (const auto& label : config.ablate_configs) wanted = wanted || label == s.label;
    if (wanted) specs.push_back(s);
  }
  if (specs.empty()) throw ConfigError("ablate.configs selects no ablation row");

  std::vector<RunRecord> records;
  std::optional<InteractionLog> shared_log;
  for (size_t i = 0; i < config.seeds; ++i) {
    const RunConfig rep = Replicate(config, i);
    if (!shared_log || config.data_log.empty()) shared_log = LoadOrGenerateLog(rep);
    const PreparedData data = PrepareData(rep, *shared_log);
    for (const AblationSpec& spec : specs) {
      RunConfig run = rep;
      run.model.components = spec.components;
      records.push_back(RunOnce(run, data, spec.label));
      if (progress) progress(Brief(records.back()));
    }
  }
  return records;
}

std::vector<RunRecord> RunSweep(const RunConfig& config, const ProgressSink& progress) {
  const std::vector<double> values = config.sweep_values.empty()
                                         ? DefaultSweepValues(config.sweep_axis)
                                         : config.sweep_values;
  std::vector<RunRecord> records;
  std::optional<InteractionLog> shared_log;
  for (size_t i = 0; i < config.seeds; ++i) {
    const RunConfig rep = Replicate(config, i);
    if (!shared_log || config.data_log.empty()) shared_log = LoadOrGenerateLog(rep);
    const PreparedData data = PrepareData(rep, *shared_log);
    for (double v : values) {
      RunConfig run = rep;
      if (config.sweep_axis == "lambda_o") {
        run.model.weights.bpr = v;
      } else if (config.sweep_axis == "dim") {
        if (v < 1 || v != std::floor(v)) throw ConfigError("dim sweep values must be positive integers");
        run.model.dim = size_t(v);
      } else {
        throw ConfigError("unknown sweep axis '" + config.sweep_axis + "'");
      }
      run.model.Validate();
      records.push_back(RunOnce(run, data, FormatValue(v)));
      if (progress) progress(Brief(records.back()));
    }
  }
  return records;
}

void WriteRunsCsv(const std::vector<RunRecord>& records, const std::string& first_column,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << first_column << ",seed";
  for (const char* name : kMetricNames) out << "," << name;
  out << ",cold_NDCG@10,best_epoch\n";
  out.precision(10);
  for (const RunRecord& r : records) {
    out << r.label << "," << r.seed;
    for (double v : MetricValues(r.test)) out << "," << v;
    out << ",";
    if (r.test_cold) out << r.test_cold->ndcg10;
    out << "," << r.best_epoch << "\n";
  }
}

std::string SummaryTable(const std::vector<RunRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : records) {
    if (!groups.count(r.label)) order.push_back(r.label);
    groups[r.label].push_back(&r);
  }
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-24s %5s", "config", "runs");
  out << buf;
  for (const char* name : kMetricNames) {
    std::snprintf(buf, sizeof(buf), " %17s", name);
    out << buf;
  }
  out << "\n";
  for (const auto& label : order) {
    const auto& group = groups[label];
    std::snprintf(buf, sizeof(buf), "%-24s %5zu", label.c_str(), group.size());
    out << buf;
    for (size_t m = 0; m < std::size(kMetricNames); ++m) {
      double sum = 0, sq = 0;
      for (const RunRecord* r : group) {
        const double v = MetricValues(r->test)[m];
        sum += v;
        sq += v * v;
      }
      const double n = double(group.size());
      const double mean = sum / n;
      const double sd = n > 1 ? std::sqrt(std::max(0.0, (sq - n * mean * mean) / (n - 1))) : 0;
      std::snprintf(buf, sizeof(buf), " %8.4f +- %.4f", mean, sd);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

ToyProblem MakeToyProblem(uint64_t seed) {
  GenConfig gen;
  gen.seed = seed;
  gen.n_users = 8;
  gen.n_items = 12;
  gen.per_user = {6, 4, 2};
  gen.max_per_user = 0;
  gen.clusters = 4;
  gen.max_zero_target_fraction = 0.5;
  ToyProblem toy{BuildSplits(Generate(gen).log, 10, seed, 4), {}, {}};
  toy.model.dim = 8;
  toy.model.seq_layers = 1;
  toy.model.heads = 2;
  toy.model.graph_layers = 1;
  toy.model.max_seq_len = 10;
  toy.model.l2 = 1e-2;
  toy.train.seed = seed;
  return toy;
}

GradCheckReport CheckModelGradients(const ToyProblem& toy, real tolerance) {
  Model model(toy.model, toy.data, toy.train.seed);
  const Batch batch = MakeBatches(toy.data, toy.train, 1).at(0);
  auto loss = [&](Tape& tape) { return model.Loss(tape, toy.data, batch).total; };
  return CheckGradients(loss, model.params(), 1e-4, tolerance);
}

}  // namespace mbcl
