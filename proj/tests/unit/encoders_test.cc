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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "../common/oracles.h"
#include "mbcl/data.h"
#include "mbcl/errors.h"
#include "mbcl/gradcheck.h"
#include "mbcl/graph_encoder.h"
#include "mbcl/nn.h"
#include "mbcl/random.h"
#include "mbcl/sequence_encoder.h"

namespace mbcl {
namespace {

struct SeqFixture {
  ParameterStore store;
  SequenceEncoder encoder;
  SequenceEncoderConfig config;

  explicit SeqFixture(size_t d = 8, size_t layers = 2, size_t heads = 2,
                      size_t max_len = 12, uint64_t seed = 3) {
    config.dim = d;
    config.layers = layers;
    config.heads = heads;
    config.max_len = max_len;
    store.Add("items", NormalInit({10, d}, 0.5, seed, "items"));
    store.Add("pos", NormalInit({max_len, d}, 0.5, seed, "pos"));
    encoder = SequenceEncoder(store, "enc", config, seed);
  }

  Tensor Run(const std::vector<std::vector<uint32_t>>& seqs,
             EncodeOptions options = {}) {
    Tape tape;
    std::vector<std::span<const uint32_t>> spans(seqs.begin(), seqs.end());
    return encoder
        .Encode(tape, tape.Param(store.Get("items")), tape.Param(store.Get("pos")),
                spans, options)
        .value();
  }
};

real MaxAbsDiff(const Tensor& a, const Tensor& b) {
  real m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(SequenceEncoder, PaddingDoesNotChangeOutput) {
  SeqFixture f;
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<uint32_t>> seqs(3);
    for (auto& s : seqs) {
      s.resize(1 + rng.UniformInt(f.config.max_len));
      for (auto& x : s) x = uint32_t(rng.UniformInt(10));
    }
    const Tensor tight = f.Run(seqs);
    EncodeOptions padded;
    padded.pad_to = f.config.max_len;
    EXPECT_LE(MaxAbsDiff(tight, f.Run(seqs, padded)), 1e-9);
  }
}

TEST(SequenceEncoder, OrderMatters) {
  SeqFixture f;
  const Tensor out = f.Run({{1, 2}, {2, 1}});
  Tensor a({1, 8}), b({1, 8});
  std::copy(out.data(), out.data() + 8, a.data());
  std::copy(out.data() + 8, out.data() + 16, b.data());
  EXPECT_GT(MaxAbsDiff(a, b), 1e-6);
}

TEST(SequenceEncoder, SingleItemMeanEqualsLast) {
  SeqFixture mean_f;
  SeqFixture last_f;
  last_f.config.pooling = Pooling::kLast;
  last_f.encoder = SequenceEncoder(last_f.store, "enc2", last_f.config, 3);
  mean_f.encoder = SequenceEncoder(mean_f.store, "enc2", mean_f.config, 3);
  EXPECT_LE(MaxAbsDiff(mean_f.Run({{4}}), last_f.Run({{4}})), 1e-15);
}

TEST(SequenceEncoder, EmptySequenceUsesFallback) {
  SeqFixture f;
  const Tensor out = f.Run({{}, {3, 4}});
  for (size_t k = 0; k < 8; ++k) EXPECT_EQ(out.at(0, k), f.encoder.fallback().value[k]);
}

TEST(SequenceEncoder, AttentionRowsSumToOneAndSkipPadding) {
  SeqFixture f(8, 1, 2);
  std::vector<real> probs;
  EncodeOptions options;
  options.pad_to = 5;
  options.attention = &probs;
  f.Run({{1, 2, 3}}, options);
  ASSERT_EQ(probs.size(), 2u * 5 * 5);
  for (size_t h = 0; h < 2; ++h) {
    for (size_t q = 0; q < 3; ++q) {
      real sum = 0;
      for (size_t k = 0; k < 5; ++k) {
        const real p = probs[(h * 5 + q) * 5 + k];
        if (k >= 3) EXPECT_EQ(p, 0.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(SequenceEncoder, RejectsOverlongSequence) {
  SeqFixture f(8, 1, 2, 4);
  EXPECT_THROW(f.Run({{1, 2, 3, 4, 5}}), DimensionError);
}

TEST(SequenceEncoder, GradientsMatchFiniteDifferences) {
  SeqFixture f(4, 1, 2, 5);
  const std::vector<std::vector<uint32_t>> seqs = {{1, 2, 3}, {4}, {}, {5, 6}};
  auto loss = [&](Tape& tape) {
    std::vector<std::span<const uint32_t>> spans(seqs.begin(), seqs.end());
    Var out = f.encoder.Encode(tape, tape.Param(f.store.Get("items")),
                               tape.Param(f.store.Get("pos")), spans);
    return ops::Sum(ops::Mul(out, out));
  };
  auto report = CheckGradients(loss, f.store);
  EXPECT_TRUE(report.passed) << report.Summary();
}

// ---------------------------------------------------------------------------

PreparedData FromLines(const std::string& text) {
  std::istringstream in(text);
  return BuildSplits(ParseLog(in, BehaviorSchema::Default()), 50, 1);
}

std::set<std::pair<uint32_t, uint32_t>> ClickEdges(const PreparedData& data) {
  std::set<std::pair<uint32_t, uint32_t>> edges;
  for (uint32_t u = 0; u < data.num_users; ++u) {
    for (uint32_t v : data.sequences[u][0]) edges.insert({u, v});
  }
  return edges;
}

TEST(GraphEncoder, OneUserTwoItemsOneLayer) {
  auto data = FromLines("u\tx\tclick\t1\nu\ty\tclick\t2\n");
  GraphEncoder enc(data.graph, 1);
  Tape tape;
  Var users = tape.Constant(Tensor::Matrix({{1.0, 2.0}}));
  Var items = tape.Constant(Tensor::Matrix({{4.0, 0.0}, {0.0, 8.0}}));
  auto out = enc.Propagate(users, items, 0);
  // 0.5 * (u0 + 0.5 * (ex + ey))
  EXPECT_DOUBLE_EQ(out.users.value().at(0, 0), 0.5 * (1.0 + 0.5 * 4.0));
  EXPECT_DOUBLE_EQ(out.users.value().at(0, 1), 0.5 * (2.0 + 0.5 * 8.0));
}

TEST(GraphEncoder, IsolatedUserKeepsBase) {
  auto data = FromLines("a\tx\tclick\t1\nb\ty\tcart\t2\n");
  GraphEncoder enc(data.graph, 2);
  Tape tape;
  Var users = tape.Constant(Tensor::Matrix({{1.0, 2.0}, {3.0, 4.0}}));
  Var items = tape.Constant(Tensor::Matrix({{5.0, 6.0}, {7.0, 8.0}}));
  // User b has no click edge.
  auto out = enc.Propagate(users, items, 0);
  EXPECT_DOUBLE_EQ(out.users.value().at(1, 0), 3.0);
  EXPECT_DOUBLE_EQ(out.users.value().at(1, 1), 4.0);
}

TEST(GraphEncoder, DuplicateEdgeCountsOnce) {
  auto once = FromLines("u\tx\tclick\t1\nu\ty\tclick\t2\n");
  auto twice = FromLines("u\tx\tclick\t1\nu\ty\tclick\t2\nu\tx\tclick\t3\n");
  Tape tape;
  Var users = tape.Constant(Tensor::Matrix({{1.0}}));
  Var items = tape.Constant(Tensor::Matrix({{2.0}, {10.0}}));
  auto a = GraphEncoder(once.graph, 2).Propagate(users, items, 0);
  auto b = GraphEncoder(twice.graph, 2).Propagate(users, items, 0);
  EXPECT_EQ(a.users.value().storage(), b.users.value().storage());
  EXPECT_EQ(a.items.value().storage(), b.items.value().storage());
}

TEST(GraphEncoder, MatchesDenseOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::ostringstream log;
    const size_t nu = 2 + rng.UniformInt(8), ni = 2 + rng.UniformInt(8);
    for (int e = 0; e < 15; ++e) {
      log << "u" << rng.UniformInt(nu) << "\ti" << rng.UniformInt(ni)
          << "\tclick\t" << e << "\n";
    }
    auto data = FromLines(log.str());
    const size_t layers = 1 + rng.UniformInt(3);
    Tensor u0 = NormalInit({data.num_users, 3}, 1.0, trial, "u");
    Tensor v0 = NormalInit({data.num_items, 3}, 1.0, trial, "v");
    Tape tape;
    auto out = GraphEncoder(data.graph, layers)
                   .Propagate(tape.Constant(u0), tape.Constant(v0), 0);
    auto [ou, ov] = oracle::DenseGraph(ClickEdges(data), oracle::ToRows(u0),
                                       oracle::ToRows(v0), layers);
    for (size_t r = 0; r < data.num_users; ++r)
      for (size_t k = 0; k < 3; ++k)
        EXPECT_NEAR(out.users.value().at(r, k), double(ou[r][k]), 1e-10);
    for (size_t r = 0; r < data.num_items; ++r)
      for (size_t k = 0; k < 3; ++k)
        EXPECT_NEAR(out.items.value().at(r, k), double(ov[r][k]), 1e-10);
  }
}

TEST(GraphEncoder, GradientsMatchFiniteDifferences) {
  auto data = FromLines(
      "a\tx\tclick\t1\na\ty\tclick\t2\nb\ty\tclick\t3\nc\tz\tcart\t4\n");
  ParameterStore store;
  store.Add("u", NormalInit({3, 2}, 1.0, 1, "u"));
  store.Add("v", NormalInit({3, 2}, 1.0, 1, "v"));
  GraphEncoder enc(data.graph, 2);
  auto loss = [&](Tape& tape) {
    auto out = enc.Propagate(tape.Param(store.Get("u")), tape.Param(store.Get("v")), 0);
    return ops::Add(ops::Sum(ops::Mul(out.users, out.users)),
                    ops::Sum(ops::Mul(out.items, out.items)));
  };
  auto report = CheckGradients(loss, store);
  EXPECT_TRUE(report.passed) << report.Summary();
}

}  // namespace
}  // namespace mbcl
