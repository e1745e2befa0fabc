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

#include "mbcl/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mbcl/errors.h"

namespace mbcl {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const std::string s = Trim(text);
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return value;
}

size_t ParseSize(const std::string& key, const std::string& text) {
  return ParseNumber<size_t>(key, text);
}
uint64_t ParseU64(const std::string& key, const std::string& text) {
  return ParseNumber<uint64_t>(key, text);
}
double ParseReal(const std::string& key, const std::string& text) {
  return ParseNumber<double>(key, text);
}

bool ParseBool(const std::string& key, const std::string& text) {
  const std::string s = Trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

std::string FormatReal(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

std::string Join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string JoinReals(const std::vector<double>& items) {
  std::vector<std::string> parts;
  for (double x : items) parts.push_back(FormatReal(x));
  return Join(parts);
}

std::vector<double> ParseReals(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& s : SplitList(text)) out.push_back(ParseReal(key, s));
  return out;
}

struct Entry {
  ConfigKey key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MBCL_SIZE(name, field, help)                                        \
  Entry{{name, help},                                                       \
        [](RunConfig& c, const std::string& v) { c.field = ParseSize(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define MBCL_U64(name, field, help)                                        \
  Entry{{name, help},                                                      \
        [](RunConfig& c, const std::string& v) { c.field = ParseU64(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define MBCL_REAL(name, field, help)                                        \
  Entry{{name, help},                                                       \
        [](RunConfig& c, const std::string& v) { c.field = ParseReal(name, v); }, \
        [](const RunConfig& c) { return FormatReal(c.field); }}
#define MBCL_BOOL(name, field, help)                                        \
  Entry{{name, help},                                                       \
        [](RunConfig& c, const std::string& v) { c.field = ParseBool(name, v); }, \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}
#define MBCL_STRING(name, field, help)                                        \
  Entry{{name, help},                                                         \
        [](RunConfig& c, const std::string& v) { c.field = Trim(v); },         \
        [](const RunConfig& c) { return c.field; }}

const std::vector<Entry>& Entries() {
  static const std::vector<Entry> entries = {
      Entry{{"seed", "sets gen.seed, data.split_seed and train.seed together"},
            [](RunConfig& c, const std::string& v) {
              const uint64_t s = ParseU64("seed", v);
              c.gen.seed = c.split_seed = c.train.seed = s;
            },
            [](const RunConfig& c) { return std::to_string(c.train.seed); }},

      MBCL_STRING("data.log", data_log,
                  "interaction log (user<TAB>item<TAB>behavior<TAB>timestamp); "
                  "empty generates synthetic data"),
      MBCL_STRING("data.splits", data_splits,
                  "split file written by `prepare`; empty recomputes it"),
      Entry{{"data.behaviors", "ordered behavior labels, target last"},
            [](RunConfig& c, const std::string& v) {
              BehaviorSchema s{SplitList(v)};
              s.Validate();
              c.schema = s;
              c.gen.schema = s;
            },
            [](const RunConfig& c) { return Join(c.schema.labels); }},
      MBCL_SIZE("data.min_user_interactions", min_user_interactions,
                "iterative core filter threshold for users (0 disables)"),
      MBCL_SIZE("data.min_item_interactions", min_item_interactions,
                "iterative core filter threshold for items (0 disables)"),
      MBCL_SIZE("data.num_negatives", num_negatives,
                "sampled negatives per held-out item"),
      MBCL_U64("data.split_seed", split_seed, "seed for evaluation negatives"),

      MBCL_SIZE("gen.n_users", gen.n_users, "synthetic users"),
      MBCL_SIZE("gen.n_items", gen.n_items, "synthetic items"),
      MBCL_SIZE("gen.latent_dim", gen.latent_dim, "latent preference dimension"),
      Entry{{"gen.per_user", "mean records per user for each behavior"},
            [](RunConfig& c, const std::string& v) {
              c.gen.per_user = ParseReals("gen.per_user", v);
            },
            [](const RunConfig& c) { return JoinReals(c.gen.per_user); }},
      Entry{{"gen.thresholds",
             "explicit acceptance thresholds (strictly increasing); empty "
             "calibrates from gen.per_user"},
            [](RunConfig& c, const std::string& v) {
              c.gen.thresholds = ParseReals("gen.thresholds", v);
            },
            [](const RunConfig& c) { return JoinReals(c.gen.thresholds); }},
      MBCL_SIZE("gen.clusters", gen.clusters,
                "latent cluster centres (0 samples uniformly on the sphere)"),
      MBCL_REAL("gen.cluster_spread", gen.cluster_spread,
                "deviation of latent vectors around their centre"),
      MBCL_REAL("gen.noise", gen.noise, "affinity noise scale"),
      MBCL_REAL("gen.popularity", gen.popularity, "item popularity scale"),
      MBCL_REAL("gen.activity", gen.activity, "per-user activity offset scale"),
      MBCL_SIZE("gen.max_per_user", gen.max_per_user,
                "per-user cap on click records (0 disables)"),
      MBCL_REAL("gen.max_zero_target_fraction", gen.max_zero_target_fraction,
                "allowed fraction of users without a target record"),
      MBCL_SIZE("gen.max_attempts", gen.max_attempts, "regeneration attempts"),
      MBCL_U64("gen.seed", gen.seed, "generator seed"),
      MBCL_STRING("gen.out", gen_out, "output directory for `gen`"),

      Entry{{"model.components", "seq, graph, bcl, vcl, dcl joined by '+', or full"},
            [](RunConfig& c, const std::string& v) {
              c.model.components = Components::Parse(v);
            },
            [](const RunConfig& c) { return c.model.components.Label(); }},
      MBCL_SIZE("model.dim", model.dim, "embedding dimension d"),
      MBCL_SIZE("model.seq_layers", model.seq_layers, "transformer layers"),
      MBCL_SIZE("model.heads", model.heads, "attention heads"),
      MBCL_SIZE("model.graph_layers", model.graph_layers, "propagation layers"),
      MBCL_SIZE("model.max_seq_len", model.max_seq_len,
                "most recent records kept per behavior sequence"),
      MBCL_SIZE("model.ffn_mult", model.ffn_mult, "feed-forward width multiplier"),
      Entry{{"model.pooling", "sequence pooling: mean or last"},
            [](RunConfig& c, const std::string& v) {
              const std::string s = Trim(v);
              if (s == "mean") {
                c.model.pooling = Pooling::kMean;
              } else if (s == "last") {
                c.model.pooling = Pooling::kLast;
              } else {
                throw ConfigError("model.pooling must be mean or last");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.model.pooling == Pooling::kMean ? "mean" : "last");
            }},
      Entry{{"model.graph_norm", "neighbour weighting: mean or symmetric"},
            [](RunConfig& c, const std::string& v) {
              const std::string s = Trim(v);
              if (s == "mean") {
                c.model.graph_norm = GraphNorm::kMean;
              } else if (s == "symmetric") {
                c.model.graph_norm = GraphNorm::kSymmetric;
              } else {
                throw ConfigError("model.graph_norm must be mean or symmetric");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.model.graph_norm == GraphNorm::kMean ? "mean"
                                                                        : "symmetric");
            }},
      MBCL_BOOL("model.share_item_table", model.share_item_table,
                "sequence encoders reuse the graph item table"),
      MBCL_BOOL("model.share_positions", model.share_positions,
                "one position table for all behaviors"),
      MBCL_REAL("model.dropout", model.dropout, "dropout rate in the sequence encoders"),
      MBCL_REAL("model.embed_init", model.embed_init, "embedding init std"),

      MBCL_REAL("loss.lambda_o", model.weights.bpr, "weight of the ranking loss"),
      MBCL_REAL("loss.lambda_seq", model.weights.seq_cl,
                "weight of the sequence behavior contrast"),
      MBCL_REAL("loss.lambda_graph", model.weights.graph_cl,
                "weight of the graph behavior contrast"),
      MBCL_REAL("loss.lambda_view", model.weights.view_cl, "weight of the view contrast"),
      MBCL_REAL("loss.lambda_dis", model.weights.dis_cl,
                "weight of the behavior distinction loss"),
      MBCL_REAL("loss.beta", model.weights.beta,
                "weight of the auxiliary-over-random term inside the distinction loss"),

      MBCL_SIZE("train.batch_size", train.batch_size, "training pairs per batch"),
      MBCL_REAL("train.lr", train.learning_rate, "Adam learning rate"),
      MBCL_REAL("train.l2", model.l2, "L2 penalty coefficient"),
      MBCL_REAL("train.beta1", train.adam_beta1, "Adam beta1"),
      MBCL_REAL("train.beta2", train.adam_beta2, "Adam beta2"),
      MBCL_REAL("train.eps", train.adam_eps, "Adam epsilon"),
      MBCL_SIZE("train.max_epochs", train.max_epochs, "epoch limit"),
      MBCL_SIZE("train.patience", train.patience,
                "non-improving epochs tolerated before stopping"),
      MBCL_U64("train.seed", train.seed, "initialization and batching seed"),
      Entry{{"train.negative_scope",
             "training negatives avoid train-split target items (train_only) "
             "or target items of any split (any_split)"},
            [](RunConfig& c, const std::string& v) {
              const std::string s = Trim(v);
              if (s == "train_only") {
                c.train.negative_scope = NegativeScope::kTargetTrainOnly;
              } else if (s == "any_split") {
                c.train.negative_scope = NegativeScope::kTargetAnySplit;
              } else {
                throw ConfigError("train.negative_scope must be train_only or any_split");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.train.negative_scope == NegativeScope::kTargetTrainOnly
                                     ? "train_only"
                                     : "any_split");
            }},

      MBCL_STRING("run.dir", run_dir, "output directory for prepare/train/eval/ablate/sweep"),
      MBCL_STRING("eval.segment", eval_segment, "overall, cold_start or all"),
      MBCL_STRING("eval.checkpoint", checkpoint,
                  "checkpoint to evaluate; empty uses <run.dir>/best.ckpt"),

      MBCL_SIZE("experiment.seeds", seeds,
                "replicates for ablate/sweep; replicate i uses seed + i"),
      Entry{{"ablate.configs", "subset of ablation rows (labels joined by ','); empty runs all"},
            [](RunConfig& c, const std::string& v) {
              c.ablate_configs.clear();
              for (const auto& s : SplitList(v)) {
                c.ablate_configs.push_back(Components::Parse(s).Label());
              }
            },
            [](const RunConfig& c) { return Join(c.ablate_configs); }},
      Entry{{"sweep.axis", "lambda_o or dim"},
            [](RunConfig& c, const std::string& v) {
              const std::string s = Trim(v);
              if (s != "lambda_o" && s != "dim") {
                throw ConfigError("sweep.axis must be lambda_o or dim");
              }
              c.sweep_axis = s;
            },
            [](const RunConfig& c) { return c.sweep_axis; }},
      Entry{{"sweep.values", "axis values; empty uses the standard grid"},
            [](RunConfig& c, const std::string& v) {
              c.sweep_values = ParseReals("sweep.values", v);
            },
            [](const RunConfig& c) { return JoinReals(c.sweep_values); }},
  };
  return entries;
}

#undef MBCL_SIZE
#undef MBCL_U64
#undef MBCL_REAL
#undef MBCL_BOOL
#undef MBCL_STRING

const Entry* FindEntry(const std::string& key) {
  for (const Entry& e : Entries()) {
    if (e.key.name == key) return &e;
  }
  return nullptr;
}

size_t EditDistance(const std::string& a, const std::string& b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

[[noreturn]] void UnknownKey(const std::string& key) {
  std::string best;
  size_t best_distance = 4;
  for (const Entry& e : Entries()) {
    const size_t d = EditDistance(key, e.key.name);
    if (d < best_distance) {
      best_distance = d;
      best = e.key.name;
    }
  }
  throw ConfigError("unknown config key '" + key + "'" +
                    (best.empty() ? "" : " (did you mean '" + best + "'?)"));
}

}  // namespace

void RunConfig::Validate() const {
  schema.Validate();
  model.Validate();
  train.Validate();
  if (eval_segment != "overall" && eval_segment != "cold_start" &&
      eval_segment != "cold" && eval_segment != "all") {
    throw ConfigError("eval.segment must be overall, cold_start or all");
  }
  if (seeds == 0) throw ConfigError("experiment.seeds must be positive");
  if (num_negatives == 0) throw ConfigError("data.num_negatives must be positive");
}

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const Entry& e : Entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void SetConfigValue(RunConfig& config, const std::string& key,
                    const std::string& value) {
  const Entry* e = FindEntry(Trim(key));
  if (!e) UnknownKey(Trim(key));
  e->set(config, value);
}

std::string GetConfigValue(const RunConfig& config, const std::string& key) {
  const Entry* e = FindEntry(key);
  if (!e) UnknownKey(key);
  return e->get(config);
}

std::vector<std::pair<std::string, std::string>> ParseConfigText(
    const std::string& text, const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || Trim(line.substr(0, eq)).empty()) {
      throw ConfigError(source + ":" + std::to_string(number) +
                        ": expected key = value");
    }
    out.emplace_back(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  return out;
}

std::string ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ApplyConfigText(RunConfig& config, const std::string& text,
                     const std::string& source) {
  for (const auto& [key, value] : ParseConfigText(text, source)) {
    try {
      SetConfigValue(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": " + e.what());
    } catch (const SchemaError& e) {
      throw ConfigError(source + ": " + e.what());
    }
  }
}

void ApplyConfigFile(RunConfig& config, const std::string& path) {
  ApplyConfigText(config, ReadConfigFile(path), path);
}

std::string DumpConfig(const RunConfig& config) {
  std::string out;
  for (const Entry& e : Entries()) {
    if (e.key.name == "seed") continue;  // covered by the three specific seeds
    out += e.key.name + "=" + e.get(config) + "\n";
  }
  return out;
}

std::map<std::string, std::string> ConfigMap(const RunConfig& config) {
  std::map<std::string, std::string> out;
  for (const Entry& e : Entries()) {
    if (e.key.name != "seed") out[e.key.name] = e.get(config);
  }
  return out;
}

std::vector<double> DefaultSweepValues(const std::string& axis) {
  if (axis == "lambda_o") return {0.2, 1, 2, 4, 8};
  if (axis == "dim") return {16, 32, 64, 128, 256};
  throw ConfigError("unknown sweep axis '" + axis + "'");
}

}  // namespace mbcl
