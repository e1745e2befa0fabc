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

// mbcl: generate data, prepare splits, train, evaluate, run ablations and
// sweeps, and check gradients.
//
// Configuration is layered: built-in defaults, then the config file given by
// --config (or $MBCL_CONFIG), then --key=value overrides in order.
//
// Exit codes:
//   0  success
//   1  unexpected internal error
//   2  usage or configuration error
//   3  data, parse or schema error (including I/O)
//   4  numeric failure (non-finite loss or gradient)
//   5  verification failure (leakage check, gradient check)

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mbcl/config.h"
#include "mbcl/errors.h"
#include "mbcl/evaluation.h"
#include "mbcl/experiment.h"
#include "mbcl/synthetic.h"
#include "mbcl/training.h"

namespace fs = std::filesystem;

namespace mbcl {
namespace {

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
  kVerification = 5,
};

// Shorthand flags for frequently changed keys.
const std::map<std::string, std::string>& Aliases() {
  static const std::map<std::string, std::string> aliases = {
      {"components", "model.components"}, {"segment", "eval.segment"},
      {"out", "gen.out"},                 {"checkpoint", "eval.checkpoint"},
      {"axis", "sweep.axis"},             {"values", "sweep.values"},
      {"seeds", "experiment.seeds"},      {"configs", "ablate.configs"},
      {"run-dir", "run.dir"},             {"log", "data.log"},
      {"splits", "data.splits"},          {"dim", "model.dim"},
      {"epochs", "train.max_epochs"},     {"lr", "train.lr"},
  };
  return aliases;
}

std::string Canonical(const std::string& key) {
  const auto it = Aliases().find(key);
  return it == Aliases().end() ? key : it->second;
}

// `--key=value` or `--key value` tokens left over by the option parser.
std::vector<std::pair<std::string, std::string>> ParseOverrides(
    const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) {
      throw ConfigError("unexpected argument '" + a + "'");
    }
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(Canonical(a.substr(2, eq - 2)), a.substr(eq + 1));
    } else if (i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(Canonical(a.substr(2)), args[i + 1]);
      ++i;
    } else {
      throw ConfigError("missing value for '" + a + "'");
    }
  }
  return out;
}

struct Invocation {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> file_values;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool resume = false;
  bool print_config = false;
};

RunConfig Resolve(const Invocation& inv) {
  RunConfig config;
  for (const auto& [k, v] : inv.file_values) SetConfigValue(config, k, v);
  for (const auto& [k, v] : inv.overrides) SetConfigValue(config, k, v);
  config.Validate();
  return config;
}

void Log(const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); }

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void EchoConfig(const RunConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  WriteText(dir / "config.txt", DumpConfig(config));
}

int CmdGen(const RunConfig& config) {
  if (config.gen_out.empty()) {
    throw ConfigError("gen needs an output directory (--out=DIR or gen.out)");
  }
  GenConfig gen = config.gen;
  gen.schema = config.schema;
  const GeneratedData g = Generate(gen, Log);
  const fs::path dir = config.gen_out;
  fs::create_directories(dir);
  WriteLogTsv(g.log, (dir / "interactions.tsv").string());
  WriteSidecar(g.log, (dir / "interactions.json").string());
  EchoConfig(config, dir);
  const auto counts = g.log.CountsPerBehavior();
  std::printf("wrote %zu records (%zu users, %zu items) to %s\n", g.log.records.size(),
              g.log.num_users(), g.log.num_items(), dir.string().c_str());
  for (size_t b = 0; b < counts.size(); ++b) {
    std::printf("  %-8s %zu records, threshold %.6f\n", g.log.schema.labels[b].c_str(),
                counts[b], g.thresholds[b]);
  }
  return kOk;
}

int CmdPrepare(const RunConfig& config) {
  const InteractionLog log = LoadOrGenerateLog(config, Log);
  const PreparedData data = PrepareData(config, log);
  VerifyNoLeak(data);
  const fs::path dir = config.run_dir;
  EchoConfig(config, dir);
  data.split.Save((dir / "splits.json").string());
  size_t held = 0, cold = 0;
  for (const auto& u : data.split.users) {
    held += u.test_item.has_value();
    cold += u.test_item.has_value() && u.cold_start;
  }
  std::printf("%zu users, %zu items; %zu with a test item (%zu cold-start); splits in %s\n",
              data.num_users, data.num_items, held, cold,
              (dir / "splits.json").string().c_str());
  return kOk;
}

std::string EpochLine(const EpochRecord& r) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "epoch %3zu  loss %.5f  bpr %.5f  valid NDCG@10 %s%s  %.1fs",
                r.epoch, r.loss.total, r.loss.bpr,
                r.valid ? std::to_string(r.valid->ndcg10).c_str() : "-",
                r.improved ? " *" : "", r.seconds);
  return buf;
}

std::vector<EvalResult> EvaluateSegments(const Model& model, const PreparedData& data,
                                         const std::string& segment) {
  std::vector<EvalResult> results;
  if (segment == "all" || segment == "overall") {
    results.push_back(Evaluate(model, data, EvalSplit::kTest, EvalSegment::kOverall));
  }
  if (segment == "all" || segment == "cold_start" || segment == "cold") {
    try {
      results.push_back(Evaluate(model, data, EvalSplit::kTest, EvalSegment::kColdStart));
    } catch (const DataError& e) {
      if (segment != "all") throw;
      Log(std::string("skipping cold_start segment: ") + e.what());
    }
  }
  return results;
}

int CmdTrain(const RunConfig& config, bool resume) {
  const InteractionLog log = LoadOrGenerateLog(config, Log);
  const PreparedData data = PrepareData(config, log);
  const fs::path dir = config.run_dir;
  EchoConfig(config, dir);
  Trainer trainer(config.model, config.train, data);
  if (resume) {
    trainer.Resume((dir / "last.ckpt").string());
    Log("resumed after epoch " + std::to_string(trainer.epoch()));
  }
  TrainHooks hooks;
  hooks.run_dir = dir.string();
  hooks.config_echo = ConfigMap(config);
  hooks.on_epoch = [](const EpochRecord& r) { Log(EpochLine(r)); };
  const TrainResult result = trainer.Run(hooks);
  const auto results = EvaluateSegments(trainer.model(), data, "all");
  WriteText(dir / "metrics.json", ResultsJson(results));
  std::printf("best epoch %zu (valid NDCG@10 %.4f)%s\n%s", result.best_epoch,
              result.best_valid_ndcg10, result.stopped_early ? ", stopped early" : "",
              ResultsTable(results).c_str());
  return kOk;
}

int CmdEval(const Invocation& inv) {
  // The model configuration comes from the checkpoint; only evaluation and
  // path keys may change.
  auto adjustable = [](const std::string& key) {
    return key.rfind("eval.", 0) == 0 || key == "run.dir" || key == "data.log" ||
           key == "data.splits";
  };
  RunConfig paths;
  for (const auto& [k, v] : inv.file_values) {
    if (adjustable(k)) SetConfigValue(paths, k, v);
  }
  for (const auto& [k, v] : inv.overrides) {
    if (!adjustable(k)) {
      (void)GetConfigValue(paths, k);  // unknown keys are still usage errors
      throw ConfigError("eval reads '" + k + "' from the checkpoint; it cannot be overridden");
    }
    SetConfigValue(paths, k, v);
  }
  const std::string ckpt = paths.checkpoint.empty()
                               ? (fs::path(paths.run_dir) / "best.ckpt").string()
                               : paths.checkpoint;
  const CheckpointInfo info = ReadCheckpointInfo(ckpt);
  if (info.config.empty()) throw SchemaError(ckpt + " carries no configuration echo");
  RunConfig config;
  for (const auto& [k, v] : info.config) SetConfigValue(config, k, v);
  for (const auto& [k, v] : inv.file_values) {
    if (adjustable(k)) SetConfigValue(config, k, v);
  }
  for (const auto& [k, v] : inv.overrides) SetConfigValue(config, k, v);
  if (paths.checkpoint.empty()) config.checkpoint.clear();
  config.run_dir = paths.run_dir;
  config.Validate();

  const InteractionLog log = LoadOrGenerateLog(config, Log);
  const PreparedData data = PrepareData(config, log);
  Model model(config.model, data, config.train.seed);
  LoadCheckpoint(ckpt, model.params(), nullptr);
  const auto results = EvaluateSegments(model, data, config.eval_segment);
  const fs::path dir = config.run_dir;
  fs::create_directories(dir);
  const std::string json = ResultsJson(results);
  const std::string table = ResultsTable(results);
  WriteText(dir / "eval.json", json);
  WriteText(dir / "eval.txt", table);
  for (const EvalResult& r : results) {
    WriteRanksCsv(r, data, log.user_labels,
                  (dir / ("ranks_" + SegmentName(r.segment) + ".csv")).string());
  }
  std::printf("%s", table.c_str());
  return kOk;
}

int CmdAblate(const RunConfig& config) {
  const fs::path dir = config.run_dir;
  EchoConfig(config, dir);
  const auto records = RunAblation(config, Log);
  WriteRunsCsv(records, "config", (dir / "ablation.csv").string());
  const std::string summary = SummaryTable(records);
  WriteText(dir / "ablation.txt", summary);
  std::printf("%s", summary.c_str());
  return kOk;
}

int CmdSweep(const RunConfig& config) {
  const fs::path dir = config.run_dir;
  EchoConfig(config, dir);
  const auto records = RunSweep(config, Log);
  WriteRunsCsv(records, config.sweep_axis, (dir / ("sweep_" + config.sweep_axis + ".csv")).string());
  const std::string summary = SummaryTable(records);
  WriteText(dir / ("sweep_" + config.sweep_axis + ".txt"), summary);
  std::printf("%s", summary.c_str());
  return kOk;
}

int CmdCheckGrads(const RunConfig& config) {
  ToyProblem toy = MakeToyProblem(config.train.seed);
  toy.model.components = config.model.components;
  toy.model.weights = config.model.weights;
  const GradCheckReport report = CheckModelGradients(toy);
  std::printf("%s\n", report.Summary().c_str());
  return report.passed ? kOk : kVerification;
}

std::string KeyHelp() {
  std::string out = "Config keys (file lines `key = value`, or --key=value):\n";
  for (const ConfigKey& k : ConfigKeys()) out += "  " + k.name + "\n      " + k.help + "\n";
  out += "Shorthands:";
  for (const auto& [alias, key] : Aliases()) out += " --" + alias + "=" + key;
  return out + "\n";
}

int Main(int argc, char** argv) {
  CLI::App app{"Multi-behavior contrastive recommendation toolkit"};
  app.require_subcommand(1);
  app.allow_extras();
  app.footer(std::string("Exit codes: 0 ok, 1 internal, 2 usage/config, 3 data, 4 numeric, "
                         "5 verification.\nDefault config file: $") +
             kConfigEnvVar);
  Invocation inv;
  bool list_keys = false;
  app.add_option("--config", inv.config_path, "config file (default: $MBCL_CONFIG)");
  app.add_flag("--print-config", inv.print_config, "print the effective config and exit");
  app.add_flag("--list-keys", list_keys, "list every config key and exit");

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands = {
      {"gen", "generate a synthetic interaction log"},
      {"prepare", "compute leave-one-out splits and evaluation negatives"},
      {"train", "train a model"},
      {"eval", "evaluate a checkpoint on the test split"},
      {"ablate", "run the ablation table"},
      {"sweep", "sweep lambda_o or the embedding dimension"},
      {"check-grads", "compare analytic and numeric gradients on a toy problem"},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->allow_extras();
    sub->fallthrough();
    subs.push_back(sub);
  }
  subs[2]->add_flag("--resume", inv.resume, "continue from <run.dir>/last.ckpt");

  // Overrides are handled after parsing so --list-keys works without a command.
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--list-keys") {
      std::printf("%s", KeyHelp().c_str());
      return kOk;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = nullptr;
  for (CLI::App* s : subs) {
    if (s->parsed()) chosen = s;
  }
  const std::string command = chosen->get_name();
  try {
    std::vector<std::string> extras = app.remaining();
    for (const auto& a : chosen->remaining()) extras.push_back(a);
    inv.overrides = ParseOverrides(extras);
    std::string path = inv.config_path;
    if (path.empty()) {
      if (const char* env = std::getenv(kConfigEnvVar)) path = env;
    }
    if (!path.empty()) inv.file_values = ParseConfigText(ReadConfigFile(path), path);

    if (command == "eval") return CmdEval(inv);
    const RunConfig config = Resolve(inv);
    if (inv.print_config) {
      std::printf("%s", DumpConfig(config).c_str());
      return kOk;
    }
    if (command == "gen") return CmdGen(config);
    if (command == "prepare") return CmdPrepare(config);
    if (command == "train") return CmdTrain(config, inv.resume);
    if (command == "ablate") return CmdAblate(config);
    if (command == "sweep") return CmdSweep(config);
    return CmdCheckGrads(config);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "mbcl %s: config error: %s\n", command.c_str(), e.what());
    return kUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "mbcl %s: numeric error: %s\n", command.c_str(), e.what());
    return kNumeric;
  } catch (const VerificationError& e) {
    std::fprintf(stderr, "mbcl %s: verification failed: %s\n", command.c_str(), e.what());
    return kVerification;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "mbcl %s: parse error: %s\n", command.c_str(), e.what());
    return kData;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "mbcl %s: schema error: %s\n", command.c_str(), e.what());
    return kData;
  } catch (const DataError& e) {
    std::fprintf(stderr, "mbcl %s: data error: %s\n", command.c_str(), e.what());
    return kData;
  } catch (const IndexError& e) {
    std::fprintf(stderr, "mbcl %s: data error: %s\n", command.c_str(), e.what());
    return kData;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "mbcl %s: internal error: %s\n", command.c_str(), e.what());
    return kInternal;
  } catch (const Error& e) {
    std::fprintf(stderr, "mbcl %s: I/O error: %s\n", command.c_str(), e.what());
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "mbcl %s: I/O error: %s\n", command.c_str(), e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mbcl %s: error: %s\n", command.c_str(), e.what());
    return kInternal;
  }
}

}  // namespace
}  // namespace mbcl

int main(int argc, char** argv) { return mbcl::Main(argc, argv); }
