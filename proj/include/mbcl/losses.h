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

// Ranking and contrastive objectives. Every loss is a mean over its
// contributing terms, and each term is -log sigmoid(score gap) >= 0.

#ifndef MBCL_LOSSES_H_
#define MBCL_LOSSES_H_

#include <span>

#include "mbcl/autodiff.h"

namespace mbcl {

// f(x, y, z) = log sigmoid(x.y - x.z).
real PairwiseF(std::span<const real> x, std::span<const real> y,
               std::span<const real> z);

namespace loss {

// mean_i -log sigmoid(pos[i] - neg[i]) over [n]-shaped score vectors.
Var Bpr(Var positive_scores, Var negative_scores);

// Rows are users. For every anchor i and every other user j:
//   -f(anchors[i], positives[i], positives[j])
// averaged over the n(n-1) ordered pairs. Fewer than two rows gives 0.
Var Contrast(Var anchors, Var positives);

// Per row r:
//   -f(u[r], vi[r], vj[r]) - beta * f(u[r], vj[r], vk[r])
// averaged over rows.
Var Distinction(Var u, Var vi, Var vj, Var vk, real beta);

// coeff * sum of squares over every parameter with decay = true.
Var L2Penalty(Tape& tape, ParameterStore& params, real coeff);

}  // namespace loss
}  // namespace mbcl

#endif  // MBCL_LOSSES_H_
