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

#ifndef MBCL_GRADCHECK_H_
#define MBCL_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "mbcl/autodiff.h"

namespace mbcl {

struct GradCheckEntry {
  std::string tensor;
  size_t index = 0;
  real analytic = 0;
  real numeric = 0;
  real error = 0;
  real step = 0;
};

struct TensorGradError {
  std::string tensor;
  // max_i |a_i - n_i| / max(1, |n_i|)
  real elementwise = 0;
  // ||a - n|| / max(||a||, ||n||); zero when both norms are below 1e-7.
  real relative = 0;
  real norm = 0;
};

struct GradCheckReport {
  size_t checked = 0;
  // Entries whose derivative was re-measured with a smaller step.
  size_t refined = 0;
  real tolerance = 0;
  real max_error = 0;
  bool passed = true;
  // Largest errors first.
  std::vector<GradCheckEntry> worst;
  // In parameter order.
  std::vector<TensorGradError> per_tensor;

  std::string Summary() const;
  // Throws VerificationError naming the worst offending tensor and index.
  void ThrowIfFailed() const;
};

// Builds a scalar loss on the given tape. Must be deterministic given the
// parameter values.
using LossFn = std::function<Var(Tape&)>;

// Compares reverse-mode gradients of `loss` against fourth-order central
// differences for every entry of every parameter. A tensor passes when both
// its elementwise and its norm-relative error are within `tolerance`.
//
// An entry that disagrees with its analytic value by more than tolerance/10
// (relative) is re-measured with steps step/10, step/100, ... down to
// `min_step`, keeping the first estimate that agrees. This handles
// piecewise-linear activations whose breakpoint lies inside the stencil; an
// incorrect gradient disagrees at every step and still fails.
GradCheckReport CheckGradients(const LossFn& loss, ParameterStore& params,
                               real step = 1e-4, real tolerance = 1e-4,
                               size_t keep_worst = 10, real min_step = 1e-8);

}  // namespace mbcl

#endif  // MBCL_GRADCHECK_H_
