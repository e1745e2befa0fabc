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

#include "mbcl/data.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "mbcl/errors.h"

namespace mbcl {

using nlohmann::json;

std::optional<uint32_t> BehaviorSchema::Find(const std::string& label) const {
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return uint32_t(i);
  }
  return std::nullopt;
}

void BehaviorSchema::Validate() const {
  if (labels.size() < 2) {
    throw SchemaError("at least two behaviors are required (got " +
                      std::to_string(labels.size()) + ")");
  }
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw SchemaError("duplicate behavior label");
  for (const auto& l : labels) {
    if (l.empty()) throw SchemaError("empty behavior label");
  }
}

std::vector<size_t> InteractionLog::CountsPerBehavior() const {
  std::vector<size_t> counts(schema.size(), 0);
  for (const Interaction& r : records) ++counts[r.behavior];
  return counts;
}

namespace {

struct RawRecord {
  std::string user;
  std::string item;
  uint32_t behavior;
  int64_t timestamp;
};

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t begin = 0;
  while (true) {
    const size_t end = line.find('\t', begin);
    fields.push_back(line.substr(begin, end - begin));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return fields;
}

void FilterCores(std::vector<RawRecord>& records, const LoadOptions& options) {
  if (options.min_user_interactions == 0 && options.min_item_interactions == 0) {
    return;
  }
  while (true) {
    std::unordered_map<std::string, size_t> user_count;
    std::unordered_map<std::string, size_t> item_count;
    for (const RawRecord& r : records) {
      ++user_count[r.user];
      ++item_count[r.item];
    }
    const size_t before = records.size();
    std::erase_if(records, [&](const RawRecord& r) {
      return user_count[r.user] < options.min_user_interactions ||
             item_count[r.item] < options.min_item_interactions;
    });
    if (records.size() == before) return;
  }
}

}  // namespace

InteractionLog ParseLog(std::istream& in, const BehaviorSchema& schema,
                        const LoadOptions& options) {
  schema.Validate();
  std::vector<RawRecord> raw;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 4) {
      throw ParseError("expected 4 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError("empty user or item id", line_no);
    }
    const auto behavior = schema.Find(fields[2]);
    if (!behavior) {
      throw SchemaError("unknown behavior label '" + fields[2] + "' (line " +
                        std::to_string(line_no) + ")");
    }
    int64_t ts = 0;
    const std::string& t = fields[3];
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), ts);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw ParseError("invalid timestamp '" + t + "'", line_no);
    }
    raw.push_back({fields[0], fields[1], *behavior, ts});
  }
  FilterCores(raw, options);
  if (raw.empty()) throw DataError("no interactions");

  InteractionLog log;
  log.schema = schema;
  std::unordered_map<std::string, uint32_t> user_index;
  std::unordered_map<std::string, uint32_t> item_index;
  log.records.reserve(raw.size());
  for (const RawRecord& r : raw) {
    auto [u, new_user] = user_index.try_emplace(r.user, log.user_labels.size());
    if (new_user) log.user_labels.push_back(r.user);
    auto [v, new_item] = item_index.try_emplace(r.item, log.item_labels.size());
    if (new_item) log.item_labels.push_back(r.item);
    log.records.push_back({u->second, v->second, r.behavior, r.timestamp});
  }
  return log;
}

InteractionLog LoadLog(const std::string& path, const BehaviorSchema& schema,
                       const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction log: " + path);
  return ParseLog(in, schema, options);
}

void WriteLogTsv(const InteractionLog& log, std::ostream& out) {
  for (const Interaction& r : log.records) {
    out << log.user_labels[r.user] << '\t' << log.item_labels[r.item] << '\t'
        << log.schema.labels[r.behavior] << '\t' << r.timestamp << '\n';
  }
}

void WriteLogTsv(const InteractionLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  WriteLogTsv(log, out);
}

void WriteSidecar(const InteractionLog& log, const std::string& path) {
  json j;
  j["format"] = "mbcl-log";
  j["version"] = 1;
  j["behaviors"] = log.schema.labels;
  j["target"] = log.schema.labels.back();
  j["num_users"] = log.num_users();
  j["num_items"] = log.num_items();
  j["num_records"] = log.records.size();
  const auto counts = log.CountsPerBehavior();
  for (size_t b = 0; b < counts.size(); ++b) {
    j["counts"][log.schema.labels[b]] = counts[b];
  }
  j["users"] = log.user_labels;
  j["items"] = log.item_labels;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(1) << '\n';
}

BehaviorSchema ReadSidecarSchema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sidecar: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("sidecar: ") + e.what());
  }
  if (!j.contains("behaviors")) throw SchemaError("sidecar lacks 'behaviors'");
  BehaviorSchema schema{j["behaviors"].get<std::vector<std::string>>()};
  schema.Validate();
  return schema;
}

bool InteractionGraph::HasEdge(uint32_t user, uint32_t item,
                               uint32_t behavior) const {
  if (behavior >= user_items.size() || user >= num_users) return false;
  auto n = user_items[behavior].neighbors(user);
  return std::binary_search(n.begin(), n.end(), item);
}

size_t InteractionGraph::NumEdges(uint32_t behavior) const {
  return user_items.at(behavior).indices.size();
}

// ----------------------------------------------------------------------------
// Splits

std::string SplitSpec::ToJson() const {
  json j;
  j["format"] = "mbcl-splits";
  j["version"] = kSplitFormatVersion;
  j["seed"] = seed;
  j["num_negatives"] = num_negatives;
  j["num_users"] = users.size();
  json list = json::array();
  for (size_t u = 0; u < users.size(); ++u) {
    const UserSplit& s = users[u];
    json e;
    e["test"] = s.test_item ? json(*s.test_item) : json(nullptr);
    e["valid"] = s.valid_item ? json(*s.valid_item) : json(nullptr);
    e["train_target"] = s.train_target_count;
    e["cold"] = s.cold_start;
    e["test_neg"] = test_negatives[u];
    e["valid_neg"] = valid_negatives[u];
    list.push_back(std::move(e));
  }
  j["users"] = std::move(list);
  return j.dump();
}

SplitSpec SplitSpec::FromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("splits: ") + e.what());
  }
  if (j.value("format", "") != "mbcl-splits") {
    throw SchemaError("not an mbcl splits file");
  }
  if (j.value("version", 0) != kSplitFormatVersion) {
    throw SchemaError("unsupported splits version " +
                      std::to_string(j.value("version", 0)));
  }
  SplitSpec spec;
  spec.seed = j["seed"].get<uint64_t>();
  spec.num_negatives = j["num_negatives"].get<size_t>();
  for (const json& e : j["users"]) {
    UserSplit s;
    if (!e["test"].is_null()) s.test_item = e["test"].get<uint32_t>();
    if (!e["valid"].is_null()) s.valid_item = e["valid"].get<uint32_t>();
    s.train_target_count = e["train_target"].get<uint32_t>();
    s.cold_start = e["cold"].get<bool>();
    spec.users.push_back(s);
    spec.test_negatives.push_back(e["test_neg"].get<std::vector<uint32_t>>());
    spec.valid_negatives.push_back(e["valid_neg"].get<std::vector<uint32_t>>());
  }
  return spec;
}

void SplitSpec::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << ToJson() << '\n';
}

SplitSpec SplitSpec::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open splits: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJson(buffer.str());
}

std::vector<uint32_t> SampleNegatives(std::span<const uint32_t> excluded,
                                      size_t num_items, size_t k, Rng& rng) {
  const size_t eligible = num_items - excluded.size();
  if (excluded.size() > num_items || eligible < k) {
    throw DataError("need " + std::to_string(k) + " negatives but only " +
                    std::to_string(excluded.size() > num_items ? 0 : eligible) +
                    " eligible items exist");
  }
  std::vector<uint32_t> out;
  out.reserve(k);
  auto is_excluded = [&](uint32_t item) {
    return std::binary_search(excluded.begin(), excluded.end(), item);
  };
  if (k * 4 <= eligible) {
    std::unordered_set<uint32_t> chosen;
    while (out.size() < k) {
      const uint32_t item = uint32_t(rng.UniformInt(num_items));
      if (is_excluded(item) || !chosen.insert(item).second) continue;
      out.push_back(item);
    }
    return out;
  }
  std::vector<uint32_t> pool;
  pool.reserve(eligible);
  for (uint32_t item = 0; item < num_items; ++item) {
    if (!is_excluded(item)) pool.push_back(item);
  }
  for (size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + rng.UniformInt(pool.size() - i)]);
    out.push_back(pool[i]);
  }
  return out;
}

namespace {

// Record indices per user in (timestamp, input order).
std::vector<std::vector<size_t>> RecordsByUser(const InteractionLog& log) {
  std::vector<std::vector<size_t>> by_user(log.num_users());
  for (size_t i = 0; i < log.records.size(); ++i) {
    by_user[log.records[i].user].push_back(i);
  }
  for (auto& list : by_user) {
    std::stable_sort(list.begin(), list.end(), [&](size_t a, size_t b) {
      return log.records[a].timestamp < log.records[b].timestamp;
    });
  }
  return by_user;
}

std::vector<std::vector<uint32_t>> TargetItems(const InteractionLog& log) {
  std::vector<std::vector<uint32_t>> out(log.num_users());
  const uint32_t target = log.schema.target();
  for (const Interaction& r : log.records) {
    if (r.behavior == target) out[r.user].push_back(r.item);
  }
  for (auto& items : out) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return out;
}

Adjacency BuildAdjacency(size_t num_rows,
                         std::vector<std::pair<uint32_t, uint32_t>>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  Adjacency adj;
  adj.offsets.assign(num_rows + 1, 0);
  for (const auto& [row, col] : edges) ++adj.offsets[row + 1];
  std::partial_sum(adj.offsets.begin(), adj.offsets.end(), adj.offsets.begin());
  adj.indices.reserve(edges.size());
  for (const auto& e : edges) adj.indices.push_back(e.second);
  return adj;
}

}  // namespace

SplitSpec ComputeSplitSpec(const InteractionLog& log, uint64_t seed,
                           size_t num_negatives) {
  const uint32_t target = log.schema.target();
  const auto by_user = RecordsByUser(log);
  const auto target_items = TargetItems(log);
  SplitSpec spec;
  spec.seed = seed;
  spec.num_negatives = num_negatives;
  spec.users.resize(log.num_users());
  spec.valid_negatives.resize(log.num_users());
  spec.test_negatives.resize(log.num_users());
  Rng rng(DeriveSeed(seed, "eval-negatives"));
  for (uint32_t u = 0; u < log.num_users(); ++u) {
    // Distinct target items ordered by their last occurrence.
    std::vector<uint32_t> order;
    for (size_t idx : by_user[u]) {
      const Interaction& r = log.records[idx];
      if (r.behavior != target) continue;
      std::erase(order, r.item);
      order.push_back(r.item);
    }
    UserSplit& s = spec.users[u];
    if (!order.empty()) s.test_item = order.back();
    if (order.size() >= 3) s.valid_item = order[order.size() - 2];
    for (size_t idx : by_user[u]) {
      const Interaction& r = log.records[idx];
      if (r.behavior != target) continue;
      if (r.item == s.test_item || r.item == s.valid_item) continue;
      ++s.train_target_count;
    }
    s.cold_start = s.train_target_count < kColdStartThreshold;
    if (s.valid_item) {
      spec.valid_negatives[u] =
          SampleNegatives(target_items[u], log.num_items(), num_negatives, rng);
    }
    if (s.test_item) {
      spec.test_negatives[u] =
          SampleNegatives(target_items[u], log.num_items(), num_negatives, rng);
    }
  }
  return spec;
}

PreparedData Materialize(const InteractionLog& log, const SplitSpec& split,
                         size_t max_seq_len) {
  log.schema.Validate();
  if (split.users.size() != log.num_users()) {
    throw DataError("split covers " + std::to_string(split.users.size()) +
                    " users but the log has " +
                    std::to_string(log.num_users()));
  }
  if (max_seq_len == 0) throw ConfigError("max_seq_len must be positive");
  const size_t num_b = log.schema.size();
  const uint32_t target = log.schema.target();
  PreparedData data;
  data.schema = log.schema;
  data.num_users = log.num_users();
  data.num_items = log.num_items();
  data.max_seq_len = max_seq_len;
  data.split = split;
  data.target_items = TargetItems(log);
  data.sequences.assign(data.num_users,
                        std::vector<std::vector<uint32_t>>(num_b));
  data.train_positives.resize(data.num_users);
  data.auxiliary_only.resize(data.num_users);

  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> ui(num_b);
  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> iu(num_b);
  const auto by_user = RecordsByUser(log);
  for (uint32_t u = 0; u < data.num_users; ++u) {
    const UserSplit& s = split.users[u];
    for (auto item : {s.test_item, s.valid_item}) {
      if (item && *item >= data.num_items) {
        throw IndexError("held-out item out of range for user " +
                         std::to_string(u));
      }
    }
    for (size_t idx : by_user[u]) {
      const Interaction& r = log.records[idx];
      if (r.item == s.test_item || r.item == s.valid_item) continue;
      data.sequences[u][r.behavior].push_back(r.item);
      ui[r.behavior].emplace_back(u, r.item);
      iu[r.behavior].emplace_back(r.item, u);
      if (r.behavior == target) {
        data.train_positives[u].push_back(r.item);
      } else if (!std::binary_search(data.target_items[u].begin(),
                                     data.target_items[u].end(), r.item)) {
        data.auxiliary_only[u].push_back(r.item);
      }
    }
    for (auto& seq : data.sequences[u]) {
      if (seq.size() > max_seq_len) {
        seq.erase(seq.begin(), seq.end() - max_seq_len);
      }
    }
    for (auto* list : {&data.train_positives[u], &data.auxiliary_only[u]}) {
      std::sort(list->begin(), list->end());
      list->erase(std::unique(list->begin(), list->end()), list->end());
    }
  }
  data.graph.num_users = data.num_users;
  data.graph.num_items = data.num_items;
  for (size_t b = 0; b < num_b; ++b) {
    data.graph.user_items.push_back(BuildAdjacency(data.num_users, ui[b]));
    data.graph.item_users.push_back(BuildAdjacency(data.num_items, iu[b]));
  }
  return data;
}

bool PreparedData::IsTargetItem(uint32_t user, uint32_t item) const {
  const auto& items = target_items[user];
  return std::binary_search(items.begin(), items.end(), item);
}

std::span<const uint32_t> PreparedData::Excluded(uint32_t user,
                                                 NegativeScope scope) const {
  return scope == NegativeScope::kTargetAnySplit ? target_items[user]
                                                 : train_positives[user];
}

std::vector<uint32_t> PreparedData::EvaluableUsers(bool cold_start_only) const {
  std::vector<uint32_t> users;
  for (uint32_t u = 0; u < num_users; ++u) {
    const UserSplit& s = split.users[u];
    if (!s.test_item) continue;
    if (cold_start_only && !s.cold_start) continue;
    users.push_back(u);
  }
  return users;
}

std::vector<uint32_t> PreparedData::ValidationUsers() const {
  std::vector<uint32_t> users;
  for (uint32_t u = 0; u < num_users; ++u) {
    if (split.users[u].valid_item) users.push_back(u);
  }
  return users;
}

void VerifyNoLeak(const PreparedData& data) {
  for (uint32_t u = 0; u < data.num_users; ++u) {
    const UserSplit& s = data.split.users[u];
    for (auto held : {s.test_item, s.valid_item}) {
      if (!held) continue;
      auto fail = [&](const std::string& where) {
        throw VerificationError("held-out item " + std::to_string(*held) +
                                " of user " + std::to_string(u) +
                                " leaked into " + where);
      };
      for (size_t b = 0; b < data.num_behaviors(); ++b) {
        const auto& seq = data.sequences[u][b];
        if (std::find(seq.begin(), seq.end(), *held) != seq.end()) {
          fail("sequence of behavior " + data.schema.labels[b]);
        }
        if (data.graph.HasEdge(u, *held, uint32_t(b))) {
          fail("graph behavior " + data.schema.labels[b]);
        }
        auto users = data.graph.item_users[b].neighbors(*held);
        if (std::binary_search(users.begin(), users.end(), u)) {
          fail("item adjacency of behavior " + data.schema.labels[b]);
        }
      }
      const auto& pos = data.train_positives[u];
      if (std::binary_search(pos.begin(), pos.end(), *held)) {
        fail("train positives");
      }
    }
  }
}

}  // namespace mbcl
