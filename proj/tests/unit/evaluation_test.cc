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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "../common/fixtures.h"
#include "../common/oracles.h"
#include "mbcl/errors.h"
#include "mbcl/random.h"

namespace mbcl {
namespace {

TEST(PessimisticRank, Examples) {
  std::vector<real> negatives = {0.1, 0.2, 0.3};
  EXPECT_EQ(PessimisticRank(0.9, negatives), 1u);
  std::vector<real> ties = {0.5, 0.5, 0.1, 0.2};
  EXPECT_EQ(PessimisticRank(0.5, ties), 3u);
}

TEST(PessimisticRank, MatchesSortOracle) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> negatives(99);
    // Coarse values so ties occur.
    for (double& s : negatives) s = double(rng.UniformInt(20));
    const double positive = double(rng.UniformInt(20));
    EXPECT_EQ(PessimisticRank(positive, negatives), oracle::SortRank(positive, negatives));
  }
}

TEST(ComputeMetrics, ClosedForms) {
  std::vector<size_t> r1 = {1};
  Metrics m = ComputeMetrics(r1);
  EXPECT_EQ(m.hit5, 1.0);
  EXPECT_EQ(m.ndcg5, 1.0);
  EXPECT_EQ(m.mrr, 1.0);
  EXPECT_EQ(m.auc, 1.0);

  std::vector<size_t> r3 = {3};
  m = ComputeMetrics(r3);
  EXPECT_EQ(m.ndcg5, 0.5);
  EXPECT_NEAR(m.mrr, 1.0 / 3, 1e-15);
  EXPECT_NEAR(m.auc, 97.0 / 99, 1e-15);

  std::vector<size_t> r6 = {6};
  m = ComputeMetrics(r6);
  EXPECT_EQ(m.hit5, 0.0);
  EXPECT_EQ(m.hit10, 1.0);
  EXPECT_NEAR(m.ndcg10, 0.35620718710802218, 1e-15);

  std::vector<size_t> two = {1, 6};
  EXPECT_EQ(ComputeMetrics(two).hit5, 0.5);
  EXPECT_EQ(ComputeMetrics(two).users, 2u);
}

TEST(ComputeMetrics, Errors) {
  EXPECT_THROW(ComputeMetrics(std::vector<size_t>{}), DataError);
  EXPECT_THROW(ComputeMetrics(std::vector<size_t>{0}), IndexError);
  EXPECT_THROW(ComputeMetrics(std::vector<size_t>{101}), IndexError);
}

TEST(ComputeMetrics, MatchesPairwiseOracle) {
  Rng rng(9);
  std::vector<double> positives;
  std::vector<std::vector<double>> negatives;
  std::vector<size_t> ranks;
  for (int u = 0; u < 300; ++u) {
    std::vector<double> neg(99);
    for (double& s : neg) s = rng.Normal();
    const double pos = rng.Normal() + 1.0;
    positives.push_back(pos);
    negatives.push_back(neg);
    ranks.push_back(PessimisticRank(pos, neg));
  }
  const Metrics m = ComputeMetrics(ranks);
  const oracle::MetricRow o = oracle::Metrics(positives, negatives);
  EXPECT_NEAR(m.mrr, double(o.mrr), 1e-12);
  EXPECT_NEAR(m.auc, double(o.auc), 1e-12);
  EXPECT_NEAR(m.hit5, double(o.hit5), 1e-12);
  EXPECT_NEAR(m.ndcg5, double(o.ndcg5), 1e-12);
  EXPECT_NEAR(m.hit10, double(o.hit10), 1e-12);
  EXPECT_NEAR(m.ndcg10, double(o.ndcg10), 1e-12);
  EXPECT_LE(m.hit5, m.hit10);
  EXPECT_LE(m.ndcg5, m.ndcg10);
}

TEST(Evaluate, SegmentsAndSideEffects) {
  auto data = testing::SmallData(3);
  ModelConfig c;
  c.dim = 8;
  c.max_seq_len = 10;
  Model model(c, data, 1);
  std::vector<Tensor> before;
  for (size_t i = 0; i < model.params().size(); ++i) before.push_back(model.params()[i].value);

  const EvalResult overall = Evaluate(model, data, EvalSplit::kTest, EvalSegment::kOverall);
  const EvalResult again = Evaluate(model, data, EvalSplit::kTest, EvalSegment::kOverall);
  EXPECT_EQ(overall.ranks, again.ranks);
  EXPECT_EQ(overall.users, data.EvaluableUsers(false));
  for (size_t i = 0; i < model.params().size(); ++i) {
    EXPECT_EQ(model.params()[i].value.storage(), before[i].storage());
    for (real g : model.params()[i].grad.values()) EXPECT_EQ(g, 0.0);
  }
  const EvalResult cold = Evaluate(model, data, EvalSplit::kTest, EvalSegment::kColdStart);
  for (uint32_t u : cold.users) EXPECT_TRUE(data.split.users[u].cold_start);
  EXPECT_EQ(cold.users, data.EvaluableUsers(true));

  const std::string json = ResultsJson({overall, cold});
  EXPECT_NE(json.find("\"cold_start\""), std::string::npos);
  EXPECT_NE(json.find("\"NDCG@10\""), std::string::npos);
  const std::string table = ResultsTable({overall, cold});
  EXPECT_NE(table.find("overall"), std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "mbcl_ranks.csv";
  WriteRanksCsv(overall, data, {}, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "user,user_label,item,rank");
  std::filesystem::remove(path);
}

TEST(Segment, Parse) {
  EXPECT_EQ(ParseSegment("cold"), EvalSegment::kColdStart);
  EXPECT_EQ(ParseSegment("overall"), EvalSegment::kOverall);
  EXPECT_THROW(ParseSegment("warm"), ConfigError);
}

}  // namespace
}  // namespace mbcl
