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

// Sampled leave-one-out ranking metrics.

#ifndef MBCL_EVALUATION_H_
#define MBCL_EVALUATION_H_

#include <span>
#include <string>
#include <vector>

#include "mbcl/data.h"
#include "mbcl/model.h"

namespace mbcl {

struct Metrics {
  double mrr = 0;
  double auc = 0;
  double hit5 = 0;
  double ndcg5 = 0;
  double hit10 = 0;
  double ndcg10 = 0;
  size_t users = 0;
};

// Metric names in report order.
inline constexpr const char* kMetricNames[] = {"MRR",    "AUC",     "HIT@5",
                                               "NDCG@5", "HIT@10", "NDCG@10"};
std::vector<double> MetricValues(const Metrics& m);

// 1 + number of negatives scoring at least as high as the positive.
size_t PessimisticRank(real positive, std::span<const real> negatives);

// `num_negatives` sets the AUC denominator: AUC = (n + 1 - rank) / n.
// Throws DataError on an empty rank list.
Metrics ComputeMetrics(std::span<const size_t> ranks,
                       size_t num_negatives = 99);

enum class EvalSplit { kValidation, kTest };
enum class EvalSegment { kOverall, kColdStart };

std::string SegmentName(EvalSegment segment);
EvalSegment ParseSegment(const std::string& name);

struct EvalResult {
  EvalSplit split = EvalSplit::kTest;
  EvalSegment segment = EvalSegment::kOverall;
  Metrics metrics;
  std::vector<uint32_t> users;
  std::vector<size_t> ranks;
};

// Scores the held-out item against its frozen negatives for every eligible
// user. Throws DataError when no user is eligible.
EvalResult Evaluate(const Model& model, const PreparedData& data,
                    EvalSplit split, EvalSegment segment);

std::string MetricsJson(const Metrics& m);
std::string ResultsJson(const std::vector<EvalResult>& results);
std::string ResultsTable(const std::vector<EvalResult>& results);
// user,user_label,item,rank rows; user labels come from `user_labels` when
// non-empty.
void WriteRanksCsv(const EvalResult& result, const PreparedData& data,
                   const std::vector<std::string>& user_labels,
                   const std::string& path);

}  // namespace mbcl

#endif  // MBCL_EVALUATION_H_
