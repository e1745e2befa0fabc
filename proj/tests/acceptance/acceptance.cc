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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.
//
//   mbcl_acceptance [--only=1,2,...] [--cli=path/to/mbcl] [--out=DIR]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../common/oracles.h"
#include "json.hpp"
#include "mbcl/errors.h"
#include "mbcl/config.h"
#include "mbcl/data.h"
#include "mbcl/evaluation.h"
#include "mbcl/experiment.h"
#include "mbcl/graph_encoder.h"
#include "mbcl/losses.h"
#include "mbcl/nn.h"
#include "mbcl/random.h"
#include "mbcl/sequence_encoder.h"
#include "mbcl/training.h"

namespace fs = std::filesystem;

namespace mbcl {
namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

oracle::Rows RandomRows(Rng& rng, size_t n, size_t d, double scale) {
  oracle::Rows rows(n, oracle::Row(d));
  for (auto& r : rows) {
    for (auto& x : r) x = scale * rng.Normal();
  }
  return rows;
}

Tensor ToTensor(const oracle::Rows& rows) {
  Tensor t({rows.size(), rows.empty() ? 0 : rows[0].size()});
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) t.at(r, c) = real(rows[r][c]);
  }
  return t;
}

// ---------------------------------------------------------------------------

Outcome GradientCorrectness() {
  const auto start = Clock::now();
  const ToyProblem toy = MakeToyProblem(7);
  const GradCheckReport report = CheckModelGradients(toy, 1e-4);
  const double elapsed = Seconds(start);
  Outcome o;
  o.passed = report.passed && elapsed < 60;
  o.detail = Fmt("%zu users, %zu items, d=%zu; %zu entries, max error %.2e over %zu tensors, "
                 "%zu re-measured at a smaller step; %.1f s",
                 toy.data.num_users, toy.data.num_items, toy.model.dim, report.checked,
                 report.max_error, report.per_tensor.size(), report.refined, elapsed);
  if (!report.passed) o.detail += "\n" + report.Summary();
  return o;
}

Outcome LossOracles() {
  double worst[5] = {0, 0, 0, 0, 0};
  size_t evaluated[5] = {0, 0, 0, 0, 0};
  auto track = [&](int term, double value, long double reference) {
    worst[term] = std::max(worst[term], std::abs(value - double(reference)));
    ++evaluated[term];
  };
  Rng rng(2024);
  // Standalone loss functions on random rows.
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.UniformInt(8), d = 1 + rng.UniformInt(6);
    const double scale = trial % 10 == 0 ? 4.0 : 1.0;
    auto u = RandomRows(rng, n, d, scale), a = RandomRows(rng, n, d, scale),
         b = RandomRows(rng, n, d, scale), c = RandomRows(rng, n, d, scale);
    Tape tape(false);
    Var tu = tape.Constant(ToTensor(u)), ta = tape.Constant(ToTensor(a)),
        tb = tape.Constant(ToTensor(b)), tc = tape.Constant(ToTensor(c));
    track(0, loss::Bpr(ops::RowDot(tu, ta), ops::RowDot(tu, tb)).item(), oracle::Bpr(u, a, b));
    if (n >= 2) {
      const long double ref = oracle::Contrast(a, b);
      const double got = loss::Contrast(ta, tb).item();
      for (int term = 1; term <= 3; ++term) track(term, got, ref);
    }
    const double beta = rng.Uniform(0.0, 2.0);
    track(4, loss::Distinction(tu, ta, tb, tc, beta).item(),
          oracle::Distinction(u, a, b, c, beta));
  }
  // The same terms as wired inside the model, on sampled training batches.
  size_t batches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    ToyProblem toy = MakeToyProblem(7 + trial % 3);
    toy.train.batch_size = 2 + trial % 7;
    Model model(toy.model, toy.data, uint64_t(100 + trial));
    const auto all = MakeBatches(toy.data, toy.train, size_t(trial + 1));
    const Batch& batch = all[size_t(trial) % all.size()];
    Tape tape(false);
    const LossGraph g = model.Loss(tape, toy.data, batch);
    const auto& in = g.inputs;
    auto rows = [](Var v) { return oracle::ToRows(v.value()); };
    track(0, g.bpr.item(), oracle::Bpr(rows(in.users), rows(in.positives), rows(in.negatives)));
    if (in.seq_a.valid()) track(1, g.seq_cl.item(), oracle::Contrast(rows(in.seq_a), rows(in.seq_b)));
    if (in.graph_a.valid()) {
      track(2, g.graph_cl.item(), oracle::Contrast(rows(in.graph_a), rows(in.graph_b)));
    }
    if (in.view_a.valid()) track(3, g.view_cl.item(), oracle::Contrast(rows(in.view_a), rows(in.view_b)));
    if (in.dis_u.valid()) {
      track(4, g.dis_cl.item(),
            oracle::Distinction(rows(in.dis_u), rows(in.dis_i), rows(in.dis_j), rows(in.dis_k),
                                toy.model.weights.beta));
    }
    ++batches;
  }
  const char* names[] = {"L_o", "L_SeqCL", "L_GraphCL", "L_ViewCL", "L_DisCL"};
  Outcome o;
  o.passed = true;
  std::string parts;
  for (int t = 0; t < 5; ++t) {
    o.passed = o.passed && worst[t] <= 1e-10 && evaluated[t] >= 100;
    parts += Fmt("%s%s %.1e (%zu)", t ? ", " : "", names[t], worst[t], evaluated[t]);
  }
  o.detail = "max |loss - oracle| (evaluations): " + parts +
             Fmt("; %zu model batches of size <= 8", batches);
  return o;
}

Outcome ClosedForms() {
  Rng rng(77);
  double worst_f = 0, worst_bpr = 0, worst_sum = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t d = 1 + rng.UniformInt(8);
    std::vector<real> x(d), y(d), z(d);
    for (size_t k = 0; k < d; ++k) {
      x[k] = 2 * rng.Normal();
      y[k] = 2 * rng.Normal();
      z[k] = 2 * rng.Normal();
    }
    worst_f = std::max(worst_f, std::abs(PairwiseF(x, y, y) - std::log(0.5)));
    worst_sum = std::max(worst_sum, std::abs(std::exp(PairwiseF(x, y, z)) +
                                             std::exp(PairwiseF(x, z, y)) - 1));
    Tape tape(false);
    const size_t n = 1 + rng.UniformInt(8);
    Tensor scores({n});
    for (size_t i = 0; i < n; ++i) scores[i] = 3 * rng.Normal();
    Var s = tape.Constant(scores);
    worst_bpr = std::max(worst_bpr, std::abs(loss::Bpr(s, s).item() - std::log(2.0)));
  }
  Outcome o;
  o.passed = worst_f <= 1e-12 && worst_bpr <= 1e-12 && worst_sum <= 1e-12;
  o.detail = Fmt("|f(x,y,y) - log 0.5| %.1e, |BPR(equal) - log 2| %.1e, "
                 "|e^f(x,y,z) + e^f(x,z,y) - 1| %.1e over 1000 draws",
                 worst_f, worst_bpr, worst_sum);
  return o;
}

Outcome MetricOracle() {
  Rng rng(31);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const size_t users = 1 + rng.UniformInt(400);
    std::vector<double> positives;
    std::vector<std::vector<double>> negatives;
    std::vector<size_t> ranks;
    for (size_t u = 0; u < users; ++u) {
      std::vector<double> neg(99);
      // Coarse scores on some trials so ties are common.
      const bool coarse = trial % 2 == 0;
      for (double& s : neg) s = coarse ? double(rng.UniformInt(30)) : rng.Normal();
      const double pos = coarse ? double(rng.UniformInt(30)) : rng.Normal() + 0.8;
      positives.push_back(pos);
      negatives.push_back(neg);
      ranks.push_back(PessimisticRank(pos, neg));
    }
    const Metrics m = ComputeMetrics(ranks);
    const oracle::MetricRow ref = oracle::Metrics(positives, negatives);
    const double got[] = {m.mrr, m.auc, m.hit5, m.ndcg5, m.hit10, m.ndcg10};
    const long double want[] = {ref.mrr, ref.auc, ref.hit5, ref.ndcg5, ref.hit10, ref.ndcg10};
    for (int k = 0; k < 6; ++k) worst = std::max(worst, std::abs(got[k] - double(want[k])));
  }
  const std::vector<size_t> three = {3};
  const bool rank3 = ComputeMetrics(three).ndcg5 == 0.5;
  size_t auc_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> neg(99);
    for (double& s : neg) s = double(rng.UniformInt(50));
    const double pos = double(rng.UniformInt(50));
    size_t below = 0;
    for (double s : neg) below += s < pos;
    const std::vector<size_t> r = {PessimisticRank(pos, neg)};
    auc_ok += std::abs(ComputeMetrics(r).auc - double(below) / 99.0) <= 1e-12;
  }
  Outcome o;
  o.passed = worst <= 1e-12 && rank3 && auc_ok == 1000;
  o.detail = Fmt("max |metric - brute force| %.1e over 20 cohorts; rank 3 NDCG@5 %s 0.5; "
                 "AUC pairwise identity %zu/1000",
                 worst, rank3 ? "==" : "!=", auc_ok);
  return o;
}

// Builds a log whose click edges are `edges`, written in the given order.
InteractionLog EdgeLog(const std::vector<std::pair<uint32_t, uint32_t>>& edges) {
  std::ostringstream text;
  int64_t t = 0;
  for (auto [u, v] : edges) text << "u" << u << "\ti" << v << "\tclick\t" << t++ << "\n";
  std::istringstream in(text.str());
  return ParseLog(in, BehaviorSchema::Default());
}

Outcome GraphEquivalence() {
  Rng rng(404);
  std::mt19937_64 shuffler(404);
  double worst = 0, worst_perm = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const size_t nu = 1 + rng.UniformInt(10), ni = 1 + rng.UniformInt(10);
    const size_t num_edges = 1 + rng.UniformInt(nu * ni + 3);
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    for (size_t e = 0; e < num_edges; ++e) {
      edges.push_back({uint32_t(rng.UniformInt(nu)), uint32_t(rng.UniformInt(ni))});
    }
    const size_t layers = 1 + rng.UniformInt(4), d = 1 + rng.UniformInt(4);
    // Base rows are keyed by raw label so relabelled logs can be compared.
    std::map<std::string, oracle::Row> user_rows, item_rows;
    for (size_t u = 0; u < nu; ++u) user_rows["u" + std::to_string(u)] = RandomRows(rng, 1, d, 1)[0];
    for (size_t v = 0; v < ni; ++v) item_rows["i" + std::to_string(v)] = RandomRows(rng, 1, d, 1)[0];

    auto propagate = [&](const std::vector<std::pair<uint32_t, uint32_t>>& order) {
      const InteractionLog log = EdgeLog(order);
      const PreparedData data = BuildSplits(log, 50, 1, 0);
      oracle::Rows u0, v0;
      for (const auto& l : log.user_labels) u0.push_back(user_rows.at(l));
      for (const auto& l : log.item_labels) v0.push_back(item_rows.at(l));
      Tape tape(false);
      const auto out = GraphEncoder(data.graph, layers)
                           .Propagate(tape.Constant(ToTensor(u0)), tape.Constant(ToTensor(v0)), 0);
      std::set<std::pair<uint32_t, uint32_t>> edge_set;
      for (uint32_t u = 0; u < data.num_users; ++u) {
        for (uint32_t v : data.graph.user_items[0].neighbors(u)) edge_set.insert({u, v});
      }
      const auto [ou, ov] = oracle::DenseGraph(edge_set, u0, v0, layers);
      std::map<std::string, oracle::Row> by_label;
      for (size_t r = 0; r < log.num_users(); ++r) {
        for (size_t k = 0; k < d; ++k) {
          worst = std::max(worst, double(std::abs(out.users.value().at(r, k) - ou[r][k])));
        }
        by_label[log.user_labels[r]] = oracle::ToRows(out.users.value())[r];
      }
      for (size_t r = 0; r < log.num_items(); ++r) {
        for (size_t k = 0; k < d; ++k) {
          worst = std::max(worst, double(std::abs(out.items.value().at(r, k) - ov[r][k])));
        }
        by_label[log.item_labels[r]] = oracle::ToRows(out.items.value())[r];
      }
      return by_label;
    };
    const auto original = propagate(edges);
    auto permuted_edges = edges;
    std::shuffle(permuted_edges.begin(), permuted_edges.end(), shuffler);
    const auto permuted = propagate(permuted_edges);
    for (const auto& [label, row] : original) {
      for (size_t k = 0; k < d; ++k) {
        worst_perm = std::max(worst_perm, double(std::abs(row[k] - permuted.at(label)[k])));
      }
    }
  }
  Outcome o;
  o.passed = worst <= 1e-10 && worst_perm <= 1e-10;
  o.detail = Fmt("50 random bipartite graphs (<= 20 nodes): max |sparse - dense| %.1e; "
                 "max change under edge permutation %.1e",
                 worst, worst_perm);
  return o;
}

Outcome PaddingInvariance() {
  Rng rng(606);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SequenceEncoderConfig config;
    config.heads = 1 + rng.UniformInt(3);
    config.dim = config.heads * (1 + rng.UniformInt(4));
    config.layers = 1 + rng.UniformInt(2);
    config.max_len = 2 + rng.UniformInt(15);
    config.pooling = trial % 2 ? Pooling::kMean : Pooling::kLast;
    const size_t items = 3 + rng.UniformInt(20);
    ParameterStore store;
    const uint64_t seed = uint64_t(trial) + 1;
    store.Add("items", NormalInit({items, config.dim}, 0.5, seed, "items"));
    store.Add("pos", NormalInit({config.max_len, config.dim}, 0.5, seed, "pos"));
    SequenceEncoder encoder(store, "enc", config, seed);
    std::vector<std::vector<uint32_t>> seqs(1 + rng.UniformInt(4));
    for (auto& s : seqs) {
      s.resize(1 + rng.UniformInt(config.max_len));
      for (auto& x : s) x = uint32_t(rng.UniformInt(items));
    }
    std::vector<std::span<const uint32_t>> spans(seqs.begin(), seqs.end());
    auto run = [&](size_t pad_to) {
      Tape tape(false);
      EncodeOptions options;
      options.pad_to = pad_to;
      return encoder
          .Encode(tape, tape.Param(store.Get("items")), tape.Param(store.Get("pos")), spans,
                  options)
          .value();
    };
    const Tensor tight = run(0), full = run(config.max_len);
    for (size_t i = 0; i < tight.size(); ++i) worst = std::max(worst, std::abs(tight[i] - full[i]));
  }
  Outcome o;
  o.passed = worst <= 1e-9;
  o.detail = Fmt("max |minimal - full padding| %.1e over 100 random encoders and batches", worst);
  return o;
}

// ---------------------------------------------------------------------------

Outcome Learnability() {
  const auto start = Clock::now();
  RunConfig config;  // library defaults: 2,000 users, 1,000 items, full model
  config.train.max_epochs = 50;
  const InteractionLog log = LoadOrGenerateLog(config);
  const PreparedData data = PrepareData(config, log);
  Trainer trainer(config.model, config.train, data);
  TrainHooks hooks;
  double best = 0;
  size_t reached_at = 0;
  hooks.on_epoch = [&](const EpochRecord& r) {
    const double v = r.valid ? r.valid->ndcg10 : 0;
    best = std::max(best, v);
    std::fprintf(stderr, "  [7] epoch %zu valid NDCG@10 %.4f (%.0f s)\n", r.epoch, v,
                 Seconds(start));
  };
  hooks.should_stop = [&](const EpochRecord& r) {
    if (r.valid && r.valid->ndcg10 >= 0.5 && reached_at == 0) reached_at = r.epoch;
    return reached_at != 0;
  };
  const TrainResult result = trainer.Run(hooks);
  const double elapsed = Seconds(start);
  Outcome o;
  o.passed = reached_at != 0 && reached_at <= 50 && elapsed <= 1800;
  o.detail = Fmt("%zu users, %zu items; best validation NDCG@10 %.4f%s after %zu epochs; "
                 "%.0f s total",
                 log.num_users(), log.num_items(), best,
                 reached_at ? Fmt(" (>= 0.5 at epoch %zu)", reached_at).c_str() : "",
                 result.history.size(), elapsed);
  return o;
}

// Settings for the multi-seed ablation and cold-start criteria.
constexpr const char* kAblationConfig =
    "gen.n_users = 600\n"
    "gen.n_items = 400\n"
    "model.dim = 32\n"
    "train.max_epochs = 80\n"
    "experiment.seeds = 5\n"
    "ablate.configs = seq,seq+BCL,seq+graph,seq+graph+BCL,seq+graph+BCL+VCL,"
    "seq+graph+BCL+VCL+DCL\n";

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<RunRecord> AblationRuns(bool all_rows, const std::string& out_dir) {
  RunConfig config;
  ApplyConfigText(config, kAblationConfig, "acceptance");
  if (!all_rows) config.ablate_configs = {"seq+graph+BCL+VCL+DCL"};
  const auto records = RunAblation(config, [](const std::string& line) {
    std::fprintf(stderr, "  [8/9] %s\n", line.c_str());
  });
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    WriteRunsCsv(records, "config", (fs::path(out_dir) / "ablation.csv").string());
    std::ofstream((fs::path(out_dir) / "ablation.txt")) << SummaryTable(records);
  }
  return records;
}

Outcome AblationDirection(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<double>> ndcg;
  std::map<std::string, std::map<uint64_t, double>> by_seed;
  for (const RunRecord& r : records) {
    ndcg[r.label].push_back(r.test.ndcg10);
    by_seed[r.label][r.seed] = r.test.ndcg10;
  }
  const std::string full = "seq+graph+BCL+VCL+DCL", vcl = "seq+graph+BCL+VCL",
                    bcl = "seq+graph+BCL", plain = "seq+graph", seq = "seq", seq_bcl = "seq+BCL";
  std::map<std::string, double> med;
  for (const auto& [label, values] : ndcg) med[label] = Median(values);
  size_t gap_positive = 0, seeds = 0;
  for (const auto& [seed, v] : by_seed[full]) {
    ++seeds;
    gap_positive += v > by_seed[plain].at(seed);
  }
  const bool chain = med[full] >= med[vcl] && med[vcl] >= med[bcl] && med[bcl] >= med[plain];
  const bool seq_ok = med[seq_bcl] >= med[seq];
  Outcome o;
  o.passed = seeds >= 5 && chain && seq_ok && gap_positive >= 4;
  o.detail = Fmt("median test NDCG@10 over %zu seeds: full %.4f, +VCL %.4f, +BCL %.4f, "
                 "seq+graph %.4f; seq+BCL %.4f vs seq %.4f; full > seq+graph in %zu/%zu seeds",
                 seeds, med[full], med[vcl], med[bcl], med[plain], med[seq_bcl], med[seq],
                 gap_positive, seeds);
  return o;
}

Outcome ColdStart(const std::vector<RunRecord>& records) {
  size_t better = 0, seeds = 0;
  std::string values;
  for (const RunRecord& r : records) {
    if (r.label != "seq+graph+BCL+VCL+DCL") continue;
    ++seeds;
    const double cold = r.test_cold ? r.test_cold->ndcg10 : -1;
    better += r.test_cold && r.test.ndcg10 >= cold;
    values += Fmt("%s%.3f/%.3f", values.empty() ? "" : " ", r.test.ndcg10, cold);
  }
  Outcome o;
  o.passed = seeds >= 5 && better >= 4;
  o.detail = Fmt("overall >= cold-start NDCG@10 in %zu/%zu seeds (overall/cold: %s)", better,
                 seeds, values.c_str());
  return o;
}

// ---------------------------------------------------------------------------

std::string StripTimes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mbcl::Error("cannot read " + path);
  std::string line, out;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j.erase("seconds");
    out += j.dump() + "\n";
  }
  return out;
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mbcl::Error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome Determinism(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / "mbcl_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string args =
      " --gen.n_users=300 --gen.n_items=200 --model.dim=16 --train.max_epochs=4 --seed=11";
  std::string histories[2], metrics[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    if (!cli.empty()) {
      const std::string cmd = "\"" + cli + "\" train" + args + " --run.dir=\"" + dir.string() +
                              "\" > \"" + (root / "log.txt").string() + "\" 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        return {false, "`" + cmd + "` failed:\n" + Slurp((root / "log.txt").string())};
      }
    } else {
      RunConfig config;
      ApplyConfigText(config,
                      "gen.n_users=300\ngen.n_items=200\nmodel.dim=16\ntrain.max_epochs=4\nseed=11\n");
      const InteractionLog log = LoadOrGenerateLog(config);
      const PreparedData data = PrepareData(config, log);
      TrainHooks hooks;
      hooks.run_dir = dir.string();
      const ExperimentResult r = RunExperiment(config.model, config.train, data, hooks);
      std::ofstream(dir / "metrics.json") << MetricsJson(r.test);
    }
    histories[run] = StripTimes((dir / "history.jsonl").string());
    metrics[run] = Slurp((dir / "metrics.json").string());
  }
  fs::remove_all(root);
  Outcome o;
  o.passed = !histories[0].empty() && histories[0] == histories[1] && metrics[0] == metrics[1];
  o.detail = Fmt("two `%s` runs, seed 11: histories %s, final metrics %s",
                 cli.empty() ? "library train" : "mbcl train",
                 histories[0] == histories[1] ? "identical" : "DIFFER",
                 metrics[0] == metrics[1] ? "identical" : "DIFFER");
  return o;
}

int Main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  std::string cli, out_dir;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--cli", cli, "mbcl binary used for the determinism check");
  app.add_option("--out", out_dir, "directory for the ablation CSV");
  CLI11_PARSE(app, argc, argv);
  auto selected = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };

  const char* titles[] = {"",
                          "gradient correctness",
                          "loss oracles",
                          "closed-form spot checks",
                          "metric oracle",
                          "graph-encoder equivalence",
                          "sequence padding invariance",
                          "learnability smoke test",
                          "directional ablation",
                          "cold-start report",
                          "determinism"};
  std::vector<RunRecord> ablation;
  bool have_ablation = false;
  auto ablation_runs = [&] {
    if (!have_ablation) {
      ablation = AblationRuns(selected(8), out_dir);
      have_ablation = true;
    }
    return ablation;
  };
  const std::map<int, std::function<Outcome()>> checks = {
      {1, GradientCorrectness},
      {2, LossOracles},
      {3, ClosedForms},
      {4, MetricOracle},
      {5, GraphEquivalence},
      {6, PaddingInvariance},
      {7, Learnability},
      {8, [&] { return AblationDirection(ablation_runs()); }},
      {9, [&] { return ColdStart(ablation_runs()); }},
      {10, [&] { return Determinism(cli); }},
  };
  int failures = 0;
  for (const auto& [id, check] : checks) {
    if (!selected(id)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s  %2d  %-28s %s\n", o.passed ? "PASS" : "FAIL", id, titles[id],
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace mbcl

int main(int argc, char** argv) { return mbcl::Main(argc, argv); }
