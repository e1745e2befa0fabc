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

#include "mbcl/autodiff.h"

#include <algorithm>
#include <cmath>

#include "mbcl/errors.h"

namespace mbcl {

Parameter& ParameterStore::Add(const std::string& name, Tensor value,
                               bool decay) {
  if (index_.count(name)) throw Error("duplicate parameter name: " + name);
  auto param = std::make_unique<Parameter>();
  param->name = name;
  param->grad = Tensor(value.shape());
  param->value = std::move(value);
  param->decay = decay;
  index_[name] = params_.size();
  params_.push_back(std::move(param));
  return *params_.back();
}

Parameter* ParameterStore::Find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParameterStore::Find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParameterStore::Get(const std::string& name) {
  Parameter* p = Find(name);
  if (!p) throw Error("unknown parameter: " + name);
  return *p;
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  const Parameter* p = Find(name);
  if (!p) throw Error("unknown parameter: " + name);
  return *p;
}

size_t ParameterStore::NumScalars() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto& p : params_) p->grad.Fill(0);
}

void ParameterStore::CopyValuesFrom(const ParameterStore& other) {
  if (other.size() != size()) {
    throw DimensionError("parameter store size mismatch");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    const Parameter& src = other[i];
    Parameter& dst = *params_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw DimensionError("parameter mismatch at " + dst.name);
    }
    dst.value = src.value;
  }
}

const Tensor& Var::value() const { return tape_->value(*this); }

real Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) {
    throw DimensionError("item() on tensor of shape " +
                         ShapeToString(t.shape()));
  }
  return t[0];
}

Tape::Node& Tape::node(Var v) { return nodes_[v.id()]; }

const Tape::Node& Tape::node(Var v) const { return nodes_[v.id()]; }

Var Tape::Constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Param(Parameter& param) {
  auto it = param_ids_.find(&param);
  if (it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.param = &param;
  n.needs_grad = grad_enabled_;
  n.op = "param";
  nodes_.push_back(std::move(n));
  const size_t id = nodes_.size() - 1;
  param_ids_[&param] = id;
  return Var(this, id);
}

Var Tape::Record(const char* op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return Record(op, std::move(value), std::vector<Var>(inputs),
                std::move(backward));
}

Var Tape::Record(const char* op, Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  if (check_finite_ && !value.AllFinite()) {
    throw NumericError(std::string("non-finite output from ") + op);
  }
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (in.tape() != this) {
        throw Error(std::string(op) + ": input recorded on a different tape");
      }
      needs = needs || node(in).needs_grad;
    }
  }
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs;
  n.op = op;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.param ? n.param->value : n.value;
}

bool Tape::NeedsGrad(Var v) const { return node(v).needs_grad; }

Tensor& Tape::Grad(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Tensor(value(v).shape());
  return n.grad;
}

const Tensor* Tape::GradIfAny(Var v) const {
  const Node& n = node(v);
  return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::Backward(Var loss) {
  if (!grad_enabled_) throw Error("Backward on a tape with gradients disabled");
  if (backward_done_) throw Error("Backward called twice on one tape");
  if (loss.tape() != this) throw Error("loss belongs to a different tape");
  if (value(loss).size() != 1) {
    throw DimensionError("Backward expects a scalar loss, got " +
                         ShapeToString(value(loss).shape()));
  }
  backward_done_ = true;
  if (!node(loss).needs_grad) return;
  Grad(loss).Fill(1);
  for (size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  for (auto& [param, id] : param_ids_) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    Parameter* p = n.param;
    real* dst = p->grad.data();
    const real* src = n.grad.data();
    for (size_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
  }
}

}  // namespace mbcl
