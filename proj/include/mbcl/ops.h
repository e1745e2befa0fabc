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

// Differentiable operations over Tape values.
//
// Broadcasting is restricted to trailing-dimension expansion: in a binary
// elementwise op the smaller operand's shape must equal a suffix of the larger
// operand's shape (e.g. [m x n] with [n]).

#ifndef MBCL_OPS_H_
#define MBCL_OPS_H_

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "mbcl/autodiff.h"

namespace mbcl {

// Row index meaning "all-zero row, no gradient" in GatherRows.
inline constexpr uint32_t kZeroRow = std::numeric_limits<uint32_t>::max();

// Compressed sparse rows with per-entry weights. Used for normalized
// adjacency in graph propagation.
struct SparseRows {
  size_t num_rows = 0;
  size_t num_cols = 0;
  std::vector<uint32_t> offsets;  // num_rows + 1
  std::vector<uint32_t> indices;
  std::vector<real> weights;

  size_t degree(size_t row) const { return offsets[row + 1] - offsets[row]; }
};

// One packed sequence: rows [start, start + length) of a packed token matrix,
// of which the first `valid` are real tokens and the rest padding.
struct Segment {
  size_t start = 0;
  size_t length = 0;
  size_t valid = 0;
};

enum class Pooling { kMean, kLast };

namespace ops {

Var MatMul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);

Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, real factor);
Var AddScalar(Var a, real offset);

Var Relu(Var a);
Var Sigmoid(Var a);
// Throws NumericError on non-positive input.
Var Log(Var a);
Var Exp(Var a);
// log(1 + e^x), evaluated without overflow.
Var Softplus(Var a);
// log sigmoid(x) = -softplus(-x).
Var LogSigmoid(Var a);

// Reductions. The axis variants accept rank-2 inputs only and drop the axis.
Var Sum(Var a);
Var Mean(Var a);
Var SumAxis(Var a, size_t axis);
Var MeanAxis(Var a, size_t axis);

// Row-wise softmax with max subtraction.
Var SoftmaxRows(Var a);

// out[i] = table[indices[i]]; kZeroRow yields a zero row.
Var GatherRows(Var table, std::vector<uint32_t> indices);
// Horizontal concatenation of rank-2 inputs with equal row counts.
Var ConcatCols(const std::vector<Var>& parts);
// out[i] = <a[i], b[i]>, shape [rows].
Var RowDot(Var a, Var b);
// Main diagonal of a square matrix.
Var Diagonal(Var a);

Var LayerNormRows(Var x, Var gain, Var bias, real eps = 1e-8);

// out[r] = sum_k w[r,k] * src[idx[r,k]] for rows with entries; rows without
// entries copy fallback[r].
Var SparsePropagate(std::shared_ptr<const SparseRows> adjacency, Var src,
                    Var fallback);

// Multi-head scaled dot-product self-attention over packed sequences. Key
// positions at or beyond a segment's `valid` count are masked out. When
// `probabilities` is non-null it receives the attention weights laid out as
// [segment][head][query][key] (length x length per head).
Var PackedAttention(Var q, Var k, Var v, const std::vector<Segment>& segments,
                    size_t heads, std::vector<real>* probabilities = nullptr);

// One row per segment: mean (or last) of the valid rows of the segment. A
// segment without valid rows takes the [d]-shaped fallback, which may be an
// invalid Var when no segment is empty.
Var SegmentPool(Var x, const std::vector<Segment>& segments, Var fallback,
                Pooling pooling);

}  // namespace ops

// Scalar helpers shared with reference implementations.
real StableSigmoid(real x);
real StableSoftplus(real x);
inline real StableLogSigmoid(real x) { return -StableSoftplus(-x); }

}  // namespace mbcl

#endif  // MBCL_OPS_H_
