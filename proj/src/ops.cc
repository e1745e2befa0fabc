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

#include "mbcl/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "mbcl/errors.h"

namespace mbcl {

real StableSigmoid(real x) {
  if (x >= 0) return real(1) / (real(1) + std::exp(-x));
  const real e = std::exp(x);
  return e / (real(1) + e);
}

real StableSoftplus(real x) {
  return std::max(x, real(0)) + std::log1p(std::exp(-std::abs(x)));
}

namespace ops {
namespace {

using RowMajor =
    Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using CMatMap = Eigen::Map<const RowMajor>;

CMatMap AsMatrix(const Tensor& t) {
  return CMatMap(t.data(), t.rows(), t.size() / t.rows());
}

MatMap AsMatrix(Tensor& t) { return MatMap(t.data(), t.rows(), t.size() / t.rows()); }

Tape& TapeOf(Var v, const char* op) {
  if (!v.valid()) throw Error(std::string(op) + ": invalid input");
  return *v.tape();
}

void RequireRank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a rank-2 tensor, got " +
                         ShapeToString(t.shape()));
  }
}

bool IsSuffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - small.size());
}

Shape BroadcastShape(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return a;
  if (IsSuffix(b, a)) return a;
  if (IsSuffix(a, b)) return b;
  throw DimensionError(std::string(op) + ": shapes " + ShapeToString(a) +
                       " and " + ShapeToString(b) +
                       " are not trailing-broadcast compatible");
}

template <typename Fwd>
Tensor Elementwise(const Tensor& x, Fwd fwd) {
  Tensor out(x.shape());
  const real* in = x.data();
  real* o = out.data();
  for (size_t i = 0; i < x.size(); ++i) o[i] = fwd(in[i]);
  return out;
}

// Unary op whose derivative depends only on the input value.
template <typename Fwd, typename Deriv>
Var Unary(const char* op, Var a, Fwd fwd, Deriv deriv) {
  Tape& tape = TapeOf(a, op);
  Tensor out = Elementwise(a.value(), fwd);
  return tape.Record(op, std::move(out), {a},
                     [a, deriv](Tape& t, const Tensor& g) {
                       const Tensor& x = t.value(a);
                       Tensor& gx = t.Grad(a);
                       for (size_t i = 0; i < x.size(); ++i) {
                         gx[i] += g[i] * deriv(x[i]);
                       }
                     });
}

}  // namespace

Var MatMul(Var a, Var b, bool transpose_a, bool transpose_b) {
  Tape& tape = TapeOf(a, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  RequireRank2(av, "matmul");
  RequireRank2(bv, "matmul");
  const size_t m = transpose_a ? av.cols() : av.rows();
  const size_t ka = transpose_a ? av.rows() : av.cols();
  const size_t kb = transpose_b ? bv.cols() : bv.rows();
  const size_t n = transpose_b ? bv.rows() : bv.cols();
  if (ka != kb) {
    throw DimensionError("matmul: inner extents differ (" +
                         ShapeToString(av.shape()) + " vs " +
                         ShapeToString(bv.shape()) + ")");
  }
  Tensor out({m, n});
  MatMap c = AsMatrix(out);
  CMatMap am = AsMatrix(av);
  CMatMap bm = AsMatrix(bv);
  if (!transpose_a && !transpose_b) {
    c.noalias() = am * bm;
  } else if (!transpose_a) {
    c.noalias() = am * bm.transpose();
  } else if (!transpose_b) {
    c.noalias() = am.transpose() * bm;
  } else {
    c.noalias() = am.transpose() * bm.transpose();
  }
  return tape.Record(
      "matmul", std::move(out), {a, b},
      [a, b, transpose_a, transpose_b](Tape& t, const Tensor& g) {
        CMatMap gm = AsMatrix(g);
        CMatMap am = AsMatrix(t.value(a));
        CMatMap bm = AsMatrix(t.value(b));
        if (t.NeedsGrad(a)) {
          MatMap ga = AsMatrix(t.Grad(a));
          if (!transpose_a && !transpose_b) {
            ga.noalias() += gm * bm.transpose();
          } else if (!transpose_a) {
            ga.noalias() += gm * bm;
          } else if (!transpose_b) {
            ga.noalias() += bm * gm.transpose();
          } else {
            ga.noalias() += bm.transpose() * gm.transpose();
          }
        }
        if (t.NeedsGrad(b)) {
          MatMap gb = AsMatrix(t.Grad(b));
          if (!transpose_a && !transpose_b) {
            gb.noalias() += am.transpose() * gm;
          } else if (!transpose_a) {
            gb.noalias() += gm.transpose() * am;
          } else if (!transpose_b) {
            gb.noalias() += am * gm;
          } else {
            gb.noalias() += gm.transpose() * am.transpose();
          }
        }
      });
}

namespace {

enum class BinaryKind { kAdd, kSub, kMul };

// Visits every output index with the matching operand indices. One operand
// has the output's size; the other repeats with period equal to its size.
template <typename F>
void ForEachBroadcast(size_t n, size_t na, size_t nb, F&& f) {
  if (na == n && nb == n) {
    for (size_t i = 0; i < n; ++i) f(i, i, i);
  } else if (na == n) {
    for (size_t base = 0; base < n; base += nb) {
      for (size_t j = 0; j < nb; ++j) f(base + j, base + j, j);
    }
  } else {
    for (size_t base = 0; base < n; base += na) {
      for (size_t j = 0; j < na; ++j) f(base + j, j, base + j);
    }
  }
}

Var Binary(const char* op, BinaryKind kind, Var a, Var b) {
  Tape& tape = TapeOf(a, op);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(BroadcastShape(av.shape(), bv.shape(), op));
  real* o = out.data();
  const real* x = av.data();
  const real* y = bv.data();
  const size_t n = out.size(), na = av.size(), nb = bv.size();
  switch (kind) {
    case BinaryKind::kAdd:
      ForEachBroadcast(n, na, nb, [&](size_t i, size_t ia, size_t ib) {
        o[i] = x[ia] + y[ib];
      });
      break;
    case BinaryKind::kSub:
      ForEachBroadcast(n, na, nb, [&](size_t i, size_t ia, size_t ib) {
        o[i] = x[ia] - y[ib];
      });
      break;
    case BinaryKind::kMul:
      ForEachBroadcast(n, na, nb, [&](size_t i, size_t ia, size_t ib) {
        o[i] = x[ia] * y[ib];
      });
      break;
  }
  return tape.Record(
      op, std::move(out), {a, b}, [a, b, kind](Tape& t, const Tensor& g) {
        const size_t n = g.size();
        const size_t na = t.value(a).size();
        const size_t nb = t.value(b).size();
        const real* gd = g.data();
        if (t.NeedsGrad(a)) {
          real* ga = t.Grad(a).data();
          if (kind == BinaryKind::kMul) {
            const real* y = t.value(b).data();
            ForEachBroadcast(n, na, nb, [&](size_t i, size_t ia, size_t ib) {
              ga[ia] += gd[i] * y[ib];
            });
          } else {
            ForEachBroadcast(n, na, nb, [&](size_t i, size_t ia, size_t) {
              ga[ia] += gd[i];
            });
          }
        }
        if (t.NeedsGrad(b)) {
          real* gb = t.Grad(b).data();
          if (kind == BinaryKind::kMul) {
            const real* x = t.value(a).data();
            ForEachBroadcast(n, na, nb, [&](size_t i, size_t ia, size_t ib) {
              gb[ib] += gd[i] * x[ia];
            });
          } else {
            const real sign = kind == BinaryKind::kSub ? -1 : 1;
            ForEachBroadcast(n, na, nb, [&](size_t i, size_t, size_t ib) {
              gb[ib] += sign * gd[i];
            });
          }
        }
      });
}

}  // namespace

Var Add(Var a, Var b) { return Binary("add", BinaryKind::kAdd, a, b); }
Var Sub(Var a, Var b) { return Binary("sub", BinaryKind::kSub, a, b); }
Var Mul(Var a, Var b) { return Binary("mul", BinaryKind::kMul, a, b); }

Var Scale(Var a, real factor) {
  return Unary(
      "scale", a, [factor](real x) { return x * factor; },
      [factor](real) { return factor; });
}

Var AddScalar(Var a, real offset) {
  return Unary(
      "add_scalar", a, [offset](real x) { return x + offset; },
      [](real) { return real(1); });
}

Var Relu(Var a) {
  return Unary(
      "relu", a, [](real x) { return x > 0 ? x : real(0); },
      [](real x) { return x > 0 ? real(1) : real(0); });
}

Var Sigmoid(Var a) {
  return Unary("sigmoid", a, StableSigmoid, [](real x) {
    const real s = StableSigmoid(x);
    return s * (1 - s);
  });
}

Var Log(Var a) {
  for (real x : a.value().values()) {
    if (!(x > 0)) {
      throw NumericError("log of non-positive value " + std::to_string(x));
    }
  }
  return Unary(
      "log", a, [](real x) { return std::log(x); },
      [](real x) { return 1 / x; });
}

Var Exp(Var a) {
  return Unary(
      "exp", a, [](real x) { return std::exp(x); },
      [](real x) { return std::exp(x); });
}

Var Softplus(Var a) { return Unary("softplus", a, StableSoftplus, StableSigmoid); }

Var LogSigmoid(Var a) {
  return Unary("log_sigmoid", a, StableLogSigmoid,
               [](real x) { return StableSigmoid(-x); });
}

Var Sum(Var a) {
  Tape& tape = TapeOf(a, "sum");
  real total = 0;
  for (real x : a.value().values()) total += x;
  return tape.Record("sum", Tensor::Scalar(total), {a},
                     [a](Tape& t, const Tensor& g) {
                       Tensor& ga = t.Grad(a);
                       for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
                     });
}

Var Mean(Var a) {
  Tape& tape = TapeOf(a, "mean");
  const size_t n = a.value().size();
  real total = 0;
  for (real x : a.value().values()) total += x;
  return tape.Record("mean", Tensor::Scalar(total / real(n)), {a},
                     [a, n](Tape& t, const Tensor& g) {
                       Tensor& ga = t.Grad(a);
                       const real share = g[0] / real(n);
                       for (size_t i = 0; i < ga.size(); ++i) ga[i] += share;
                     });
}

namespace {

Var ReduceAxis(const char* op, Var a, size_t axis, bool mean) {
  Tape& tape = TapeOf(a, op);
  const Tensor& x = a.value();
  RequireRank2(x, op);
  if (axis > 1) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for rank 2");
  }
  const size_t m = x.rows();
  const size_t n = x.cols();
  const size_t count = axis == 0 ? m : n;
  const real scale = mean ? real(1) / real(count) : real(1);
  Tensor out({axis == 0 ? n : m});
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) out[axis == 0 ? j : i] += x.at(i, j);
  }
  for (real& v : out.values()) v *= scale;
  return tape.Record(op, std::move(out), {a},
                     [a, axis, scale](Tape& t, const Tensor& g) {
                       Tensor& ga = t.Grad(a);
                       const size_t m = ga.rows();
                       const size_t n = ga.cols();
                       for (size_t i = 0; i < m; ++i) {
                         for (size_t j = 0; j < n; ++j) {
                           ga.at(i, j) += scale * g[axis == 0 ? j : i];
                         }
                       }
                     });
}

}  // namespace

Var SumAxis(Var a, size_t axis) { return ReduceAxis("sum_axis", a, axis, false); }

Var MeanAxis(Var a, size_t axis) { return ReduceAxis("mean_axis", a, axis, true); }

Var SoftmaxRows(Var a) {
  Tape& tape = TapeOf(a, "softmax_rows");
  const Tensor& x = a.value();
  RequireRank2(x, "softmax_rows");
  auto y = std::make_shared<Tensor>(x.shape());
  for (size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto o = y->row(i);
    const real peak = *std::max_element(in.begin(), in.end());
    real total = 0;
    for (size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (real& v : o) v /= total;
  }
  Tensor out = *y;
  return tape.Record("softmax_rows", std::move(out), {a},
                     [a, y](Tape& t, const Tensor& g) {
                       Tensor& ga = t.Grad(a);
                       for (size_t i = 0; i < y->rows(); ++i) {
                         auto p = y->row(i);
                         real dot = 0;
                         for (size_t j = 0; j < p.size(); ++j) {
                           dot += p[j] * g.at(i, j);
                         }
                         for (size_t j = 0; j < p.size(); ++j) {
                           ga.at(i, j) += p[j] * (g.at(i, j) - dot);
                         }
                       }
                     });
}

Var GatherRows(Var table, std::vector<uint32_t> indices) {
  Tape& tape = TapeOf(table, "gather_rows");
  const Tensor& src = table.value();
  RequireRank2(src, "gather_rows");
  const size_t d = src.cols();
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  Tensor out({indices.size(), d});
  for (size_t i = 0; i < indices.size(); ++i) {
    const uint32_t r = indices[i];
    if (r == kZeroRow) continue;
    if (r >= src.rows()) {
      throw IndexError("gather_rows: row " + std::to_string(r) +
                       " out of range for table with " +
                       std::to_string(src.rows()) + " rows");
    }
    std::copy_n(src.data() + size_t(r) * d, d, out.data() + i * d);
  }
  return tape.Record("gather_rows", std::move(out), {table},
                     [table, idx = std::move(indices)](Tape& t, const Tensor& g) {
                       Tensor& gt = t.Grad(table);
                       const size_t d = gt.cols();
                       for (size_t i = 0; i < idx.size(); ++i) {
                         if (idx[i] == kZeroRow) continue;
                         real* dst = gt.data() + size_t(idx[i]) * d;
                         const real* s = g.data() + i * d;
                         for (size_t j = 0; j < d; ++j) dst[j] += s[j];
                       }
                     });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& tape = TapeOf(parts.front(), "concat_cols");
  const size_t m = parts.front().value().rows();
  size_t total = 0;
  for (const Var& p : parts) {
    RequireRank2(p.value(), "concat_cols");
    if (p.value().rows() != m) {
      throw DimensionError("concat_cols: row counts differ");
    }
    total += p.value().cols();
  }
  Tensor out({m, total});
  size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const size_t w = v.cols();
    for (size_t i = 0; i < m; ++i) {
      std::copy_n(v.data() + i * w, w, out.data() + i * total + offset);
    }
    offset += w;
  }
  return tape.Record("concat_cols", std::move(out), parts,
                     [parts](Tape& t, const Tensor& g) {
                       const size_t total = g.cols();
                       size_t offset = 0;
                       for (const Var& p : parts) {
                         const size_t w = t.value(p).cols();
                         if (t.NeedsGrad(p)) {
                           Tensor& gp = t.Grad(p);
                           for (size_t i = 0; i < gp.rows(); ++i) {
                             for (size_t j = 0; j < w; ++j) {
                               gp[i * w + j] += g[i * total + offset + j];
                             }
                           }
                         }
                         offset += w;
                       }
                     });
}

Var RowDot(Var a, Var b) {
  Tape& tape = TapeOf(a, "row_dot");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  RequireRank2(x, "row_dot");
  if (x.shape() != y.shape()) {
    throw DimensionError("row_dot: shapes " + ShapeToString(x.shape()) +
                         " and " + ShapeToString(y.shape()) + " differ");
  }
  const size_t m = x.rows();
  const size_t n = x.cols();
  Tensor out({m});
  for (size_t i = 0; i < m; ++i) {
    real s = 0;
    for (size_t j = 0; j < n; ++j) s += x[i * n + j] * y[i * n + j];
    out[i] = s;
  }
  return tape.Record("row_dot", std::move(out), {a, b},
                     [a, b](Tape& t, const Tensor& g) {
                       const Tensor& x = t.value(a);
                       const Tensor& y = t.value(b);
                       const size_t n = x.cols();
                       if (t.NeedsGrad(a)) {
                         Tensor& ga = t.Grad(a);
                         for (size_t i = 0; i < x.size(); ++i) {
                           ga[i] += g[i / n] * y[i];
                         }
                       }
                       if (t.NeedsGrad(b)) {
                         Tensor& gb = t.Grad(b);
                         for (size_t i = 0; i < x.size(); ++i) {
                           gb[i] += g[i / n] * x[i];
                         }
                       }
                     });
}

Var Diagonal(Var a) {
  Tape& tape = TapeOf(a, "diagonal");
  const Tensor& x = a.value();
  RequireRank2(x, "diagonal");
  if (x.rows() != x.cols()) throw DimensionError("diagonal: matrix not square");
  const size_t n = x.rows();
  Tensor out({n});
  for (size_t i = 0; i < n; ++i) out[i] = x.at(i, i);
  return tape.Record("diagonal", std::move(out), {a},
                     [a](Tape& t, const Tensor& g) {
                       Tensor& ga = t.Grad(a);
                       for (size_t i = 0; i < g.size(); ++i) ga.at(i, i) += g[i];
                     });
}

Var LayerNormRows(Var x, Var gain, Var bias, real eps) {
  Tape& tape = TapeOf(x, "layer_norm");
  const Tensor& in = x.value();
  RequireRank2(in, "layer_norm");
  const size_t m = in.rows();
  const size_t d = in.cols();
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm: gain/bias must have " +
                         std::to_string(d) + " entries");
  }
  const real* gv = gain.value().data();
  const real* bv = bias.value().data();
  auto normalized = std::make_shared<Tensor>(in.shape());
  auto inv_std = std::make_shared<std::vector<real>>(m);
  Tensor out(in.shape());
  for (size_t i = 0; i < m; ++i) {
    const real* row = in.data() + i * d;
    real mu = 0;
    for (size_t j = 0; j < d; ++j) mu += row[j];
    mu /= real(d);
    real var = 0;
    for (size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= real(d);
    const real s = real(1) / std::sqrt(var + eps);
    (*inv_std)[i] = s;
    for (size_t j = 0; j < d; ++j) {
      const real h = (row[j] - mu) * s;
      (*normalized)[i * d + j] = h;
      out[i * d + j] = h * gv[j] + bv[j];
    }
  }
  return tape.Record(
      "layer_norm", std::move(out), {x, gain, bias},
      [x, gain, bias, normalized, inv_std](Tape& t, const Tensor& g) {
        const size_t m = g.rows();
        const size_t d = g.cols();
        const Tensor& h = *normalized;
        if (t.NeedsGrad(gain)) {
          Tensor& gg = t.Grad(gain);
          for (size_t i = 0; i < m * d; ++i) gg[i % d] += g[i] * h[i];
        }
        if (t.NeedsGrad(bias)) {
          Tensor& gb = t.Grad(bias);
          for (size_t i = 0; i < m * d; ++i) gb[i % d] += g[i];
        }
        if (t.NeedsGrad(x)) {
          Tensor& gx = t.Grad(x);
          const real* gv = t.value(gain).data();
          std::vector<real> dh(d);
          for (size_t i = 0; i < m; ++i) {
            real mean_dh = 0;
            real mean_dh_h = 0;
            for (size_t j = 0; j < d; ++j) {
              dh[j] = g[i * d + j] * gv[j];
              mean_dh += dh[j];
              mean_dh_h += dh[j] * h[i * d + j];
            }
            mean_dh /= real(d);
            mean_dh_h /= real(d);
            const real s = (*inv_std)[i];
            for (size_t j = 0; j < d; ++j) {
              gx[i * d + j] += s * (dh[j] - mean_dh - h[i * d + j] * mean_dh_h);
            }
          }
        }
      });
}

Var SparsePropagate(std::shared_ptr<const SparseRows> adjacency, Var src,
                    Var fallback) {
  Tape& tape = TapeOf(src, "sparse_propagate");
  const SparseRows& adj = *adjacency;
  const Tensor& s = src.value();
  const Tensor& f = fallback.value();
  RequireRank2(s, "sparse_propagate");
  RequireRank2(f, "sparse_propagate");
  if (s.rows() != adj.num_cols || f.rows() != adj.num_rows ||
      s.cols() != f.cols()) {
    throw DimensionError("sparse_propagate: adjacency " +
                         std::to_string(adj.num_rows) + "x" +
                         std::to_string(adj.num_cols) + " incompatible with " +
                         ShapeToString(s.shape()) + " / " +
                         ShapeToString(f.shape()));
  }
  const size_t d = s.cols();
  Tensor out({adj.num_rows, d});
  for (size_t r = 0; r < adj.num_rows; ++r) {
    real* o = out.data() + r * d;
    const uint32_t begin = adj.offsets[r];
    const uint32_t end = adj.offsets[r + 1];
    if (begin == end) {
      std::copy_n(f.data() + r * d, d, o);
      continue;
    }
    for (uint32_t e = begin; e < end; ++e) {
      const real w = adj.weights[e];
      const real* in = s.data() + size_t(adj.indices[e]) * d;
      for (size_t j = 0; j < d; ++j) o[j] += w * in[j];
    }
  }
  return tape.Record(
      "sparse_propagate", std::move(out), {src, fallback},
      [adjacency, src, fallback](Tape& t, const Tensor& g) {
        const SparseRows& adj = *adjacency;
        const size_t d = g.cols();
        const bool need_src = t.NeedsGrad(src);
        const bool need_fb = t.NeedsGrad(fallback);
        Tensor* gs = need_src ? &t.Grad(src) : nullptr;
        Tensor* gf = need_fb ? &t.Grad(fallback) : nullptr;
        for (size_t r = 0; r < adj.num_rows; ++r) {
          const real* go = g.data() + r * d;
          const uint32_t begin = adj.offsets[r];
          const uint32_t end = adj.offsets[r + 1];
          if (begin == end) {
            if (gf) {
              real* dst = gf->data() + r * d;
              for (size_t j = 0; j < d; ++j) dst[j] += go[j];
            }
            continue;
          }
          if (!gs) continue;
          for (uint32_t e = begin; e < end; ++e) {
            const real w = adj.weights[e];
            real* dst = gs->data() + size_t(adj.indices[e]) * d;
            for (size_t j = 0; j < d; ++j) dst[j] += w * go[j];
          }
        }
      });
}

Var PackedAttention(Var q, Var k, Var v, const std::vector<Segment>& segments,
                    size_t heads, std::vector<real>* probabilities) {
  Tape& tape = TapeOf(q, "packed_attention");
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  RequireRank2(qv, "packed_attention");
  if (kv.shape() != qv.shape() || vv.shape() != qv.shape()) {
    throw DimensionError("packed_attention: q/k/v shapes differ");
  }
  const size_t d = qv.cols();
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("packed_attention: dim " + std::to_string(d) +
                         " not divisible by " + std::to_string(heads) +
                         " heads");
  }
  const size_t dh = d / heads;
  const real scale = real(1) / std::sqrt(real(dh));

  // Per segment: heads blocks of length x length probabilities.
  std::vector<size_t> prob_offsets(segments.size() + 1, 0);
  for (size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    if (seg.start + seg.length > qv.rows() || seg.valid > seg.length) {
      throw DimensionError("packed_attention: segment out of range");
    }
    prob_offsets[s + 1] = prob_offsets[s] + heads * seg.length * seg.length;
  }
  auto probs = std::make_shared<std::vector<real>>(prob_offsets.back(), 0);
  Tensor out(qv.shape());
  std::vector<real> logits;
  for (size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    if (seg.valid == 0) continue;
    for (size_t h = 0; h < heads; ++h) {
      const size_t col = h * dh;
      real* p_block = probs->data() + prob_offsets[s] + h * seg.length * seg.length;
      for (size_t i = 0; i < seg.length; ++i) {
        const real* qi = qv.data() + (seg.start + i) * d + col;
        real* p = p_block + i * seg.length;
        real peak = -std::numeric_limits<real>::infinity();
        for (size_t j = 0; j < seg.valid; ++j) {
          const real* kj = kv.data() + (seg.start + j) * d + col;
          real dot = 0;
          for (size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          p[j] = dot * scale;
          peak = std::max(peak, p[j]);
        }
        real total = 0;
        for (size_t j = 0; j < seg.valid; ++j) {
          p[j] = std::exp(p[j] - peak);
          total += p[j];
        }
        real* o = out.data() + (seg.start + i) * d + col;
        for (size_t j = 0; j < seg.valid; ++j) {
          p[j] /= total;
          const real* vj = vv.data() + (seg.start + j) * d + col;
          for (size_t c = 0; c < dh; ++c) o[c] += p[j] * vj[c];
        }
      }
    }
  }
  if (probabilities) *probabilities = *probs;
  return tape.Record(
      "packed_attention", std::move(out), {q, k, v},
      [q, k, v, segments, heads, probs, prob_offsets, scale](Tape& t,
                                                             const Tensor& g) {
        const Tensor& qv = t.value(q);
        const Tensor& kv = t.value(k);
        const Tensor& vv = t.value(v);
        const size_t d = qv.cols();
        const size_t dh = d / heads;
        Tensor* gq = t.NeedsGrad(q) ? &t.Grad(q) : nullptr;
        Tensor* gk = t.NeedsGrad(k) ? &t.Grad(k) : nullptr;
        Tensor* gv = t.NeedsGrad(v) ? &t.Grad(v) : nullptr;
        std::vector<real> dlogit;
        for (size_t s = 0; s < segments.size(); ++s) {
          const Segment& seg = segments[s];
          if (seg.valid == 0) continue;
          dlogit.assign(seg.valid, 0);
          for (size_t h = 0; h < heads; ++h) {
            const size_t col = h * dh;
            const real* p_block =
                probs->data() + prob_offsets[s] + h * seg.length * seg.length;
            for (size_t i = 0; i < seg.length; ++i) {
              const real* p = p_block + i * seg.length;
              const real* go = g.data() + (seg.start + i) * d + col;
              real weighted = 0;
              for (size_t j = 0; j < seg.valid; ++j) {
                const real* vj = vv.data() + (seg.start + j) * d + col;
                real dp = 0;
                for (size_t c = 0; c < dh; ++c) dp += go[c] * vj[c];
                dlogit[j] = dp;
                weighted += p[j] * dp;
                if (gv) {
                  real* dv = gv->data() + (seg.start + j) * d + col;
                  for (size_t c = 0; c < dh; ++c) dv[c] += p[j] * go[c];
                }
              }
              const real* qi = qv.data() + (seg.start + i) * d + col;
              real* dq = gq ? gq->data() + (seg.start + i) * d + col : nullptr;
              for (size_t j = 0; j < seg.valid; ++j) {
                const real dl = p[j] * (dlogit[j] - weighted) * scale;
                if (dl == 0) continue;
                const real* kj = kv.data() + (seg.start + j) * d + col;
                if (dq) {
                  for (size_t c = 0; c < dh; ++c) dq[c] += dl * kj[c];
                }
                if (gk) {
                  real* dk = gk->data() + (seg.start + j) * d + col;
                  for (size_t c = 0; c < dh; ++c) dk[c] += dl * qi[c];
                }
              }
            }
          }
        }
      });
}

Var SegmentPool(Var x, const std::vector<Segment>& segments, Var fallback,
                Pooling pooling) {
  Tape& tape = TapeOf(x, "segment_pool");
  const Tensor& in = x.value();
  RequireRank2(in, "segment_pool");
  const size_t d = in.cols();
  bool any_empty = false;
  for (const Segment& seg : segments) {
    if (seg.start + seg.length > in.rows() || seg.valid > seg.length) {
      throw DimensionError("segment_pool: segment out of range");
    }
    any_empty = any_empty || seg.valid == 0;
  }
  if (any_empty) {
    if (!fallback.valid()) {
      throw DimensionError("segment_pool: empty segment without fallback");
    }
    if (fallback.value().size() != d) {
      throw DimensionError("segment_pool: fallback must have " +
                           std::to_string(d) + " entries");
    }
  }
  if (segments.empty()) throw DimensionError("segment_pool: no segments");
  Tensor out({segments.size(), d});
  for (size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    real* o = out.data() + s * d;
    if (seg.valid == 0) {
      std::copy_n(fallback.value().data(), d, o);
    } else if (pooling == Pooling::kLast) {
      std::copy_n(in.data() + (seg.start + seg.valid - 1) * d, d, o);
    } else {
      for (size_t i = 0; i < seg.valid; ++i) {
        const real* r = in.data() + (seg.start + i) * d;
        for (size_t j = 0; j < d; ++j) o[j] += r[j];
      }
      const real inv = real(1) / real(seg.valid);
      for (size_t j = 0; j < d; ++j) o[j] *= inv;
    }
  }
  std::vector<Var> inputs{x};
  if (any_empty) inputs.push_back(fallback);
  return tape.Record(
      "segment_pool", std::move(out), inputs,
      [x, fallback, segments, pooling, any_empty](Tape& t, const Tensor& g) {
        const size_t d = g.cols();
        Tensor* gx = t.NeedsGrad(x) ? &t.Grad(x) : nullptr;
        Tensor* gf =
            any_empty && t.NeedsGrad(fallback) ? &t.Grad(fallback) : nullptr;
        for (size_t s = 0; s < segments.size(); ++s) {
          const Segment& seg = segments[s];
          const real* go = g.data() + s * d;
          if (seg.valid == 0) {
            if (gf) {
              for (size_t j = 0; j < d; ++j) (*gf)[j] += go[j];
            }
            continue;
          }
          if (!gx) continue;
          if (pooling == Pooling::kLast) {
            real* dst = gx->data() + (seg.start + seg.valid - 1) * d;
            for (size_t j = 0; j < d; ++j) dst[j] += go[j];
            continue;
          }
          const real inv = real(1) / real(seg.valid);
          for (size_t i = 0; i < seg.valid; ++i) {
            real* dst = gx->data() + (seg.start + i) * d;
            for (size_t j = 0; j < d; ++j) dst[j] += go[j] * inv;
          }
        }
      });
}

}  // namespace ops
}  // namespace mbcl
