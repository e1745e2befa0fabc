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

#include "mbcl/nn.h"

#include <cmath>

#include "mbcl/errors.h"
#include "mbcl/ops.h"

namespace mbcl {

Tensor NormalInit(const Shape& shape, real stddev, uint64_t seed,
                  const std::string& name) {
  Rng rng(DeriveSeed(seed, name));
  Tensor t(shape);
  for (real& v : t.values()) v = real(stddev * rng.Normal());
  return t;
}

Tensor GlorotInit(size_t in, size_t out, uint64_t seed,
                  const std::string& name) {
  return NormalInit({in, out}, real(std::sqrt(2.0 / double(in + out))), seed,
                    name);
}

Linear::Linear(ParameterStore& store, const std::string& name, size_t in,
               size_t out, uint64_t seed)
    : w_(&store.Add(name + ".w", GlorotInit(in, out, seed, name + ".w"))),
      b_(&store.Add(name + ".b", NormalInit({out}, kBiasInitStd, seed, name + ".b"),
                    /*decay=*/false)) {}

Var Linear::operator()(Tape& tape, Var x) const {
  return ops::Add(ops::MatMul(x, tape.Param(*w_)), tape.Param(*b_));
}

Mlp::Mlp(ParameterStore& store, const std::string& name, size_t in,
         size_t hidden, size_t out, uint64_t seed)
    : first_(store, name + ".l1", in, hidden, seed),
      second_(store, name + ".l2", hidden, out, seed),
      ready_(true) {}

Var Mlp::operator()(Tape& tape, Var x) const {
  if (!ready_) throw Error("mlp used before construction");
  if (x.cols() != first_.in()) {
    throw DimensionError("mlp expects " + std::to_string(first_.in()) +
                         " input columns, got " + std::to_string(x.cols()));
  }
  return second_(tape, ops::Relu(first_(tape, x)));
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name,
                     size_t dim)
    : gain_(&store.Add(name + ".g", Tensor({dim}, 1), /*decay=*/false)),
      bias_(&store.Add(name + ".b", Tensor({dim}), /*decay=*/false)) {}

Var LayerNorm::operator()(Tape& tape, Var x) const {
  return ops::LayerNormRows(x, tape.Param(*gain_), tape.Param(*bias_));
}

Var Dropout(Tape& tape, Var x, real rate, Rng* rng) {
  if (rng == nullptr || rate <= 0) return x;
  if (rate >= 1) throw ConfigError("dropout rate must be below 1");
  Tensor mask(x.shape());
  const real keep = 1 - rate;
  for (real& m : mask.values()) m = rng->Uniform() < keep ? 1 / keep : 0;
  return ops::Mul(x, tape.Constant(std::move(mask)));
}

}  // namespace mbcl
