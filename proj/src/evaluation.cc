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

#include "mbcl/evaluation.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mbcl/errors.h"

namespace mbcl {

std::vector<double> MetricValues(const Metrics& m) {
  return {m.mrr, m.auc, m.hit5, m.ndcg5, m.hit10, m.ndcg10};
}

size_t PessimisticRank(real positive, std::span<const real> negatives) {
  size_t rank = 1;
  for (real s : negatives) rank += (s >= positive);
  return rank;
}

Metrics ComputeMetrics(std::span<const size_t> ranks, size_t num_negatives) {
  if (ranks.empty()) throw DataError("no ranks to summarize");
  Metrics m;
  for (size_t r : ranks) {
    if (r == 0 || r > num_negatives + 1) {
      throw IndexError("rank " + std::to_string(r) + " outside [1, " +
                       std::to_string(num_negatives + 1) + "]");
    }
    const double gain = 1.0 / std::log2(double(r) + 1.0);
    m.mrr += 1.0 / double(r);
    m.auc += num_negatives == 0
                 ? 1.0
                 : double(num_negatives + 1 - r) / double(num_negatives);
    if (r <= 5) {
      m.hit5 += 1;
      m.ndcg5 += gain;
    }
    if (r <= 10) {
      m.hit10 += 1;
      m.ndcg10 += gain;
    }
  }
  const double n = double(ranks.size());
  for (double* x : {&m.mrr, &m.auc, &m.hit5, &m.ndcg5, &m.hit10, &m.ndcg10}) {
    *x /= n;
  }
  m.users = ranks.size();
  return m;
}

std::string SegmentName(EvalSegment segment) {
  return segment == EvalSegment::kOverall ? "overall" : "cold_start";
}

EvalSegment ParseSegment(const std::string& name) {
  if (name == "overall") return EvalSegment::kOverall;
  if (name == "cold_start" || name == "cold") return EvalSegment::kColdStart;
  throw ConfigError("unknown segment '" + name +
                    "' (expected overall or cold_start)");
}

EvalResult Evaluate(const Model& model, const PreparedData& data,
                    EvalSplit split, EvalSegment segment) {
  EvalResult result;
  result.split = split;
  result.segment = segment;
  const bool cold = segment == EvalSegment::kColdStart;
  if (split == EvalSplit::kTest) {
    result.users = data.EvaluableUsers(cold);
  } else {
    for (uint32_t u : data.ValidationUsers()) {
      if (!cold || data.split.users[u].cold_start) result.users.push_back(u);
    }
  }
  if (result.users.empty()) {
    throw DataError("no users eligible for " + SegmentName(segment) +
                    (split == EvalSplit::kTest ? " test" : " validation") +
                    " evaluation");
  }
  const Tensor users = model.UserRepresentations(data, result.users);
  const Tensor items = model.ItemRepresentations();
  std::vector<real> negative_scores;
  for (size_t i = 0; i < result.users.size(); ++i) {
    const uint32_t u = result.users[i];
    const UserSplit& s = data.split.users[u];
    const uint32_t positive =
        split == EvalSplit::kTest ? *s.test_item : *s.valid_item;
    const auto& negatives = split == EvalSplit::kTest
                                ? data.split.test_negatives[u]
                                : data.split.valid_negatives[u];
    negative_scores.clear();
    for (uint32_t v : negatives) {
      negative_scores.push_back(Model::Score(users, i, items, v));
    }
    result.ranks.push_back(
        PessimisticRank(Model::Score(users, i, items, positive), negative_scores));
  }
  result.metrics = ComputeMetrics(result.ranks, data.split.num_negatives);
  return result;
}

namespace {

nlohmann::ordered_json MetricsObject(const Metrics& m) {
  nlohmann::ordered_json j;
  const auto values = MetricValues(m);
  for (size_t k = 0; k < values.size(); ++k) j[kMetricNames[k]] = values[k];
  j["users"] = m.users;
  return j;
}

}  // namespace

std::string MetricsJson(const Metrics& m) { return MetricsObject(m).dump(); }

std::string ResultsJson(const std::vector<EvalResult>& results) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const EvalResult& r : results) {
    j[SegmentName(r.segment)] = MetricsObject(r.metrics);
  }
  return j.dump(2);
}

std::string ResultsTable(const std::vector<EvalResult>& results) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-12s %6s", "segment", "users");
  out << buf;
  for (const char* name : kMetricNames) {
    std::snprintf(buf, sizeof(buf), " %8s", name);
    out << buf;
  }
  out << '\n';
  for (const EvalResult& r : results) {
    std::snprintf(buf, sizeof(buf), "%-12s %6zu", SegmentName(r.segment).c_str(),
                  r.metrics.users);
    out << buf;
    for (double v : MetricValues(r.metrics)) {
      std::snprintf(buf, sizeof(buf), " %8.4f", v);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

void WriteRanksCsv(const EvalResult& result, const PreparedData& data,
                   const std::vector<std::string>& user_labels,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "user,user_label,item,rank\n";
  for (size_t i = 0; i < result.users.size(); ++i) {
    const uint32_t u = result.users[i];
    const UserSplit& s = data.split.users[u];
    const uint32_t item =
        result.split == EvalSplit::kTest ? *s.test_item : *s.valid_item;
    out << u << ',' << (u < user_labels.size() ? user_labels[u] : "") << ','
        << item << ',' << result.ranks[i] << '\n';
  }
}

}  // namespace mbcl
