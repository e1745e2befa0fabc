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

#include "mbcl/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mbcl/errors.h"

namespace mbcl {

std::string GradCheckReport::Summary() const {
  std::ostringstream out;
  out << (passed ? "PASS" : "FAIL") << ": " << checked
      << " entries checked, max error " << max_error
      << " (tolerance " << tolerance << ")";
  if (refined > 0) out << ", " << refined << " entries re-measured at a smaller step";
  out << "\n";
  for (const TensorGradError& t : per_tensor) {
    out << "  " << t.tensor << "  elementwise=" << t.elementwise
        << " relative=" << t.relative << " norm=" << t.norm << "\n";
  }
  if (!worst.empty()) out << "worst entries:\n";
  for (const GradCheckEntry& e : worst) {
    out << "  " << e.tensor << "[" << e.index << "] analytic=" << e.analytic
        << " numeric=" << e.numeric << " err=" << e.error << " step=" << e.step
        << "\n";
  }
  return out.str();
}

void GradCheckReport::ThrowIfFailed() const {
  if (passed) return;
  const GradCheckEntry& e = worst.front();
  std::ostringstream out;
  out << "gradient check failed at " << e.tensor << "[" << e.index
      << "]: analytic " << e.analytic << " vs numeric " << e.numeric
      << " (relative error " << e.error << " > " << tolerance << ")";
  throw VerificationError(out.str());
}

namespace {

real Evaluate(const LossFn& loss) {
  Tape tape(/*grad_enabled=*/false);
  return loss(tape).item();
}

}  // namespace

GradCheckReport CheckGradients(const LossFn& loss, ParameterStore& params,
                               real step, real tolerance, size_t keep_worst,
                               real min_step) {
  const real refine_threshold = tolerance / 10;
  params.ZeroGrad();
  {
    Tape tape;
    Var value = loss(tape);
    tape.Backward(value);
  }
  GradCheckReport report;
  report.tolerance = tolerance;
  std::vector<GradCheckEntry> all;
  for (size_t p = 0; p < params.size(); ++p) {
    Parameter& param = params[p];
    real tensor_max = 0;
    real diff2 = 0, analytic2 = 0, numeric2 = 0;
    for (size_t i = 0; i < param.value.size(); ++i) {
      const real saved = param.value[i];
      auto at = [&](real offset) {
        param.value[i] = saved + offset;
        return Evaluate(loss);
      };
      // Five-point central stencil.
      auto stencil = [&](real h) {
        return (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
      };
      const real analytic = param.grad[i];
      auto loose = [&](real n) {
        const real scale = std::max({std::abs(analytic), std::abs(n), real(1e-8)});
        return std::abs(analytic - n) > refine_threshold * scale;
      };
      real h = step;
      real numeric = stencil(h);
      // A ReLU boundary within 2h of the current point spoils the stencil.
      // Shrinking the step moves the probes back onto one smooth piece.
      if (loose(numeric)) {
        for (real fine = step / 10; fine >= min_step; fine /= 10) {
          const real candidate = stencil(fine);
          if (!loose(candidate)) {
            numeric = candidate;
            h = fine;
            ++report.refined;
            break;
          }
        }
      }
      param.value[i] = saved;
      const real err =
          std::abs(analytic - numeric) / std::max(real(1), std::abs(numeric));
      tensor_max = std::max(tensor_max, err);
      diff2 += (analytic - numeric) * (analytic - numeric);
      analytic2 += analytic * analytic;
      numeric2 += numeric * numeric;
      all.push_back({param.name, i, analytic, numeric, err, h});
      ++report.checked;
    }
    const real scale = std::sqrt(std::max(analytic2, numeric2));
    const real relative = scale < 1e-7 ? 0 : std::sqrt(diff2) / scale;
    report.per_tensor.push_back(
        {param.name, tensor_max, relative, std::sqrt(analytic2)});
    report.max_error = std::max({report.max_error, tensor_max, relative});
  }
  const size_t k = std::min(keep_worst, all.size());
  std::partial_sort(all.begin(), all.begin() + k, all.end(),
                    [](const GradCheckEntry& a, const GradCheckEntry& b) {
                      return a.error > b.error;
                    });
  report.worst.assign(all.begin(), all.begin() + k);
  report.passed = !(report.max_error > tolerance);
  params.ZeroGrad();
  return report;
}

}  // namespace mbcl
