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

#include "mbcl/errors.h"
#include "mbcl/ops.h"

namespace mbcl {

real PairwiseF(std::span<const real> x, std::span<const real> y,
               std::span<const real> z) {
  if (x.size() != y.size() || x.size() != z.size()) {
    throw DimensionError("f: vectors differ in length");
  }
  real gap = 0;
  for (size_t i = 0; i < x.size(); ++i) gap += x[i] * (y[i] - z[i]);
  return StableLogSigmoid(gap);
}

namespace loss {

Var Bpr(Var positive_scores, Var negative_scores) {
  return ops::Mean(ops::Softplus(ops::Sub(negative_scores, positive_scores)));
}

Var Contrast(Var anchors, Var positives) {
  if (anchors.shape() != positives.shape()) {
    throw DimensionError("contrast: anchor and positive shapes differ");
  }
  const size_t n = anchors.rows();
  Tape& tape = *anchors.tape();
  if (n < 2) return tape.Constant(Tensor::Scalar(0));
  // gap[j][i] = a_i.p_j - a_i.p_i, so column i holds anchor i's terms.
  Var cross = ops::MatMul(positives, anchors, false, true);
  Var gap = ops::Sub(cross, ops::Diagonal(cross));
  Tensor mask({n, n}, 1);
  for (size_t i = 0; i < n; ++i) mask.at(i, i) = 0;
  Var terms = ops::Mul(ops::Softplus(gap), tape.Constant(std::move(mask)));
  return ops::Scale(ops::Sum(terms), real(1) / real(n * (n - 1)));
}

Var Distinction(Var u, Var vi, Var vj, Var vk, real beta) {
  Var si = ops::RowDot(u, vi);
  Var sj = ops::RowDot(u, vj);
  Var per_row = ops::Softplus(ops::Sub(sj, si));
  if (beta != 0) {
    Var sk = ops::RowDot(u, vk);
    Var second = ops::Softplus(ops::Sub(sk, sj));
    per_row = ops::Add(per_row, ops::Scale(second, beta));
  }
  return ops::Mean(per_row);
}

Var L2Penalty(Tape& tape, ParameterStore& params, real coeff) {
  std::vector<Var> inputs;
  real total = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.decay) continue;
    inputs.push_back(tape.Param(p));
    for (real v : p.value.values()) total += v * v;
  }
  if (inputs.empty() || coeff == 0) return tape.Constant(Tensor::Scalar(0));
  return tape.Record(
      "l2_penalty", Tensor::Scalar(coeff * total), inputs,
      [inputs, coeff](Tape& t, const Tensor& g) {
        const real scale = 2 * coeff * g[0];
        for (Var v : inputs) {
          if (!t.NeedsGrad(v)) continue;
          const Tensor& value = t.value(v);
          Tensor& grad = t.Grad(v);
          for (size_t k = 0; k < value.size(); ++k) grad[k] += scale * value[k];
        }
      });
}

}  // namespace loss
}  // namespace mbcl
