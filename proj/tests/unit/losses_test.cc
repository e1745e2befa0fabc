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

#include "mbcl/losses.h"

#include <gtest/gtest.h>

#include <cmath>

#include "../common/oracles.h"
#include "mbcl/errors.h"
#include "mbcl/gradcheck.h"
#include "mbcl/nn.h"
#include "mbcl/ops.h"

namespace mbcl {
namespace {

const double kLog2 = std::log(2.0);

Tensor Random(size_t r, size_t c, uint64_t seed) {
  return NormalInit({r, c}, 1.0, seed, "t");
}

TEST(PairwiseF, EqualCandidatesGiveLogHalf) {
  std::vector<real> x = {0.3, -1.2, 2.0}, y = {1.0, 2.0, 3.0};
  EXPECT_NEAR(PairwiseF(x, y, y), std::log(0.5), 1e-12);
}

TEST(PairwiseF, LargeMarginIsTiny) {
  std::vector<real> x = {1.0}, y = {50.0}, z = {0.0};
  EXPECT_NEAR(PairwiseF(x, y, z), -1.9287498479639178e-22, 1e-34);
}

TEST(PairwiseF, ComplementIdentity) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<real> x(5), y(5), z(5);
    for (size_t k = 0; k < 5; ++k) {
      x[k] = 3 * rng.Normal();
      y[k] = rng.Normal();
      z[k] = rng.Normal();
    }
    EXPECT_NEAR(std::exp(PairwiseF(x, y, z)) + std::exp(PairwiseF(x, z, y)), 1.0, 1e-12);
  }
}

TEST(PairwiseF, LengthMismatchThrows) {
  std::vector<real> a = {1, 2}, b = {1};
  EXPECT_THROW(PairwiseF(a, a, b), DimensionError);
}

TEST(Bpr, EqualScoresGiveLogTwo) {
  Tape tape;
  Var s = tape.Constant(Tensor::Vector({0.7, -2.0}));
  EXPECT_NEAR(loss::Bpr(s, s).item(), kLog2, 1e-12);
}

TEST(Bpr, MatchesOracle) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Tensor u = Random(4, 3, seed), vi = Random(4, 3, seed + 100), vj = Random(4, 3, seed + 200);
    Tape tape;
    Var cu = tape.Constant(u);
    Var value = loss::Bpr(ops::RowDot(cu, tape.Constant(vi)),
                          ops::RowDot(cu, tape.Constant(vj)));
    const double expected = double(
        oracle::Bpr(oracle::ToRows(u), oracle::ToRows(vi), oracle::ToRows(vj)));
    EXPECT_NEAR(value.item(), expected, 1e-10);
  }
}

TEST(Contrast, IdenticalPairIsLogTwo) {
  Tape tape;
  Var a = tape.Constant(Tensor::Matrix({{1.0, 2.0}, {1.0, 2.0}}));
  EXPECT_NEAR(loss::Contrast(a, a).item(), kLog2, 1e-12);
}

TEST(Contrast, SingleRowIsZero) {
  Tape tape;
  Var a = tape.Constant(Tensor::Matrix({{1.0, 2.0}}));
  EXPECT_EQ(loss::Contrast(a, a).item(), 0.0);
}

TEST(Contrast, MatchesOracle) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const size_t n = 2 + seed % 7;
    Tensor a = Random(n, 4, seed), p = Random(n, 4, seed + 50);
    Tape tape;
    const double got = loss::Contrast(tape.Constant(a), tape.Constant(p)).item();
    EXPECT_NEAR(got, double(oracle::Contrast(oracle::ToRows(a), oracle::ToRows(p))), 1e-10);
  }
}

TEST(Contrast, ShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(loss::Contrast(tape.Constant(Random(3, 2, 1)), tape.Constant(Random(2, 2, 1))),
               DimensionError);
}

TEST(Distinction, EqualScoresGiveOnePlusBetaLogTwo) {
  Tape tape;
  Var u = tape.Constant(Tensor::Matrix({{1.0, 0.0}}));
  Var v = tape.Constant(Tensor::Matrix({{0.0, 3.0}}));
  EXPECT_NEAR(loss::Distinction(u, v, v, v, 0.5).item(), 1.5 * kLog2, 1e-12);
  EXPECT_NEAR(loss::Distinction(u, v, v, v, 0.0).item(), kLog2, 1e-12);
}

TEST(Distinction, MatchesOracle) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const size_t n = 1 + seed % 8;
    Tensor u = Random(n, 3, seed), vi = Random(n, 3, seed + 1), vj = Random(n, 3, seed + 2),
           vk = Random(n, 3, seed + 3);
    const real beta = 0.25 * (seed % 5);
    Tape tape;
    const double got = loss::Distinction(tape.Constant(u), tape.Constant(vi), tape.Constant(vj),
                                         tape.Constant(vk), beta)
                           .item();
    const double expected = double(oracle::Distinction(oracle::ToRows(u), oracle::ToRows(vi),
                                                       oracle::ToRows(vj), oracle::ToRows(vk), beta));
    EXPECT_NEAR(got, expected, 1e-10);
  }
}

TEST(L2Penalty, SkipsNonDecayParameters) {
  ParameterStore store;
  store.Add("w", Tensor::Vector({1.0, 2.0}));
  store.Add("b", Tensor::Vector({5.0}), /*decay=*/false);
  Tape tape;
  Var penalty = loss::L2Penalty(tape, store, 0.1);
  EXPECT_NEAR(penalty.item(), 0.5, 1e-15);
  tape.Backward(penalty);
  EXPECT_NEAR(store.Get("w").grad[1], 0.4, 1e-15);
  EXPECT_EQ(store.Get("b").grad[0], 0.0);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  ParameterStore store;
  store.Add("a", Random(4, 3, 1));
  store.Add("p", Random(4, 3, 2));
  store.Add("v", Random(4, 3, 3));
  auto fn = [&](Tape& tape) {
    Var a = tape.Param(store.Get("a")), p = tape.Param(store.Get("p")),
        v = tape.Param(store.Get("v"));
    Var total = loss::Contrast(a, p);
    total = ops::Add(total, loss::Distinction(a, p, v, ops::Scale(v, 0.5), 0.7));
    total = ops::Add(total, loss::Bpr(ops::RowDot(a, p), ops::RowDot(a, v)));
    return ops::Add(total, loss::L2Penalty(tape, store, 0.01));
  };
  auto report = CheckGradients(fn, store);
  EXPECT_TRUE(report.passed) << report.Summary();
}

}  // namespace
}  // namespace mbcl
