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

#ifndef MBCL_NN_H_
#define MBCL_NN_H_

#include <cstdint>
#include <string>

#include "mbcl/autodiff.h"
#include "mbcl/random.h"

namespace mbcl {

// Every initializer draws from its own stream keyed by the parameter name, so
// adding or removing parameters never shifts the values of the others.
Tensor NormalInit(const Shape& shape, real stddev, uint64_t seed,
                  const std::string& name);
// Glorot normal for an [in x out] weight.
Tensor GlorotInit(size_t in, size_t out, uint64_t seed, const std::string& name);

// Biases start near zero, not at zero.
inline constexpr real kBiasInitStd = 0.01;

// y = x W + b with W [in x out].
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, size_t in, size_t out,
         uint64_t seed);

  Var operator()(Tape& tape, Var x) const;
  size_t in() const { return w_->value.rows(); }
  size_t out() const { return w_->value.cols(); }
  Parameter& weight() const { return *w_; }
  Parameter& bias() const { return *b_; }

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
};

// Two linear layers with ReLU between them.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, size_t in, size_t hidden,
      size_t out, uint64_t seed);

  Var operator()(Tape& tape, Var x) const;
  bool valid() const { return ready_; }
  const Linear& first() const { return first_; }
  const Linear& second() const { return second_; }

 private:
  Linear first_;
  Linear second_;
  bool ready_ = false;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, size_t dim);

  Var operator()(Tape& tape, Var x) const;

 private:
  Parameter* gain_ = nullptr;
  Parameter* bias_ = nullptr;
};

// Inverted dropout with a mask drawn from `rng`. Identity when rng is null or
// rate is zero.
Var Dropout(Tape& tape, Var x, real rate, Rng* rng);

}  // namespace mbcl

#endif  // MBCL_NN_H_
