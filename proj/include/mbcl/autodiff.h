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

#ifndef MBCL_AUTODIFF_H_
#define MBCL_AUTODIFF_H_

#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mbcl/tensor.h"

namespace mbcl {

// A named trainable tensor together with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  // Whether the tensor participates in the L2 penalty. Biases and
  // normalization parameters do not.
  bool decay = true;
};

// Owns every trainable tensor of a model. Iteration order is creation order,
// which is also the checkpoint order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& Add(const std::string& name, Tensor value, bool decay = true);

  Parameter* Find(const std::string& name);
  const Parameter* Find(const std::string& name) const;
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;

  size_t size() const { return params_.size(); }
  Parameter& operator[](size_t i) { return *params_[i]; }
  const Parameter& operator[](size_t i) const { return *params_[i]; }

  size_t NumScalars() const;
  void ZeroGrad();

  // Copies values (not gradients) from a store with identical names/shapes.
  void CopyValuesFrom(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

class Tape;

// Lightweight handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  size_t id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  size_t rows() const { return value().rows(); }
  size_t cols() const { return value().cols(); }
  // Convenience for [1]-shaped results.
  real item() const;

 private:
  friend class Tape;
  Var(Tape* tape, size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  size_t id_ = 0;
};

// Records operations in execution order and replays them in reverse to
// accumulate exact gradients. A tape is single-threaded; independent tapes may
// run concurrently as long as they only read shared parameters.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  // When set, every recorded value is scanned for NaN/Inf.
  void set_check_finite(bool value) { check_finite_ = value; }

  Var Constant(Tensor value);
  // Leaf bound to a parameter. Repeated calls return the same leaf.
  Var Param(Parameter& param);

  // Appends an operation result. `backward` is kept only when some input
  // needs a gradient; it must accumulate into inputs through Grad().
  Var Record(const char* op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var Record(const char* op, Tensor value, const std::vector<Var>& inputs,
             BackwardFn backward);

  const Tensor& value(Var v) const;
  bool NeedsGrad(Var v) const;
  // Gradient buffer of `v`, zero-initialized on first access.
  Tensor& Grad(Var v);
  // Gradient buffer if already allocated, else nullptr.
  const Tensor* GradIfAny(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and visits operations in exact reverse order of
  // recording. Parameter-leaf gradients are added into Parameter::grad.
  void Backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
    const char* op = "";
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, size_t> param_ids_;
  bool grad_enabled_ = true;
  bool check_finite_ = true;
  bool backward_done_ = false;
};

}  // namespace mbcl

#endif  // MBCL_AUTODIFF_H_
