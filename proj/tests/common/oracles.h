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

// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. Everything here is written with plain loops in long
// double and deliberately avoids the library's tensor ops.

#ifndef MBCL_TESTS_COMMON_ORACLES_H_
#define MBCL_TESTS_COMMON_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "mbcl/tensor.h"

namespace mbcl::oracle {

using Row = std::vector<long double>;
using Rows = std::vector<Row>;

inline Rows ToRows(const Tensor& t) {
  Rows out(t.rows(), Row(t.cols()));
  for (size_t r = 0; r < t.rows(); ++r) {
    for (size_t c = 0; c < t.cols(); ++c) out[r][c] = t.at(r, c);
  }
  return out;
}

inline long double Dot(const Row& a, const Row& b) {
  long double s = 0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// log(sigmoid(x)) without cancellation for large |x|.
inline long double LogSigmoid(long double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline long double F(const Row& x, const Row& y, const Row& z) {
  return LogSigmoid(Dot(x, y) - Dot(x, z));
}

inline long double Bpr(const Rows& u, const Rows& vi, const Rows& vj) {
  long double s = 0;
  for (size_t r = 0; r < u.size(); ++r) s -= LogSigmoid(Dot(u[r], vi[r]) - Dot(u[r], vj[r]));
  return s / u.size();
}

// Mean over ordered pairs i != j of -f(a_i, p_i, p_j).
inline long double Contrast(const Rows& a, const Rows& p) {
  const size_t n = a.size();
  if (n < 2) return 0;
  long double s = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (j != i) s -= F(a[i], p[i], p[j]);
    }
  }
  return s / (n * (n - 1));
}

inline long double Distinction(const Rows& u, const Rows& vi, const Rows& vj,
                               const Rows& vk, long double beta) {
  long double s = 0;
  for (size_t r = 0; r < u.size(); ++r) {
    s -= F(u[r], vi[r], vj[r]) + beta * F(u[r], vj[r], vk[r]);
  }
  return s / u.size();
}

// Dense mean-aggregation propagation over a bipartite edge set, returning the
// average of layers 0..layers. Nodes without neighbours keep layer 0.
inline std::pair<Rows, Rows> DenseGraph(
    const std::set<std::pair<uint32_t, uint32_t>>& edges, const Rows& users0,
    const Rows& items0, size_t layers) {
  const size_t nu = users0.size(), ni = items0.size(), d = users0[0].size();
  // Row-normalized adjacency in both directions.
  std::vector<std::vector<long double>> a_ui(nu, std::vector<long double>(ni, 0));
  std::vector<std::vector<long double>> a_iu(ni, std::vector<long double>(nu, 0));
  for (auto [u, i] : edges) a_ui[u][i] = a_iu[i][u] = 1;
  auto normalize = [](std::vector<std::vector<long double>>& m) {
    for (auto& row : m) {
      long double s = 0;
      for (long double x : row) s += x;
      if (s > 0) {
        for (long double& x : row) x /= s;
      }
    }
  };
  normalize(a_ui);
  normalize(a_iu);
  auto apply = [d](const std::vector<std::vector<long double>>& m,
                   const Rows& src, const Rows& base) {
    Rows out(m.size(), Row(d, 0));
    for (size_t r = 0; r < m.size(); ++r) {
      long double deg = 0;
      for (size_t c = 0; c < src.size(); ++c) {
        if (m[r][c] == 0) continue;
        deg += m[r][c];
        for (size_t k = 0; k < d; ++k) out[r][k] += m[r][c] * src[c][k];
      }
      if (deg == 0) out[r] = base[r];
    }
    return out;
  };
  Rows hu = users0, hi = items0;
  Rows su = users0, si = items0;
  for (size_t l = 0; l < layers; ++l) {
    Rows nu_ = apply(a_ui, hi, users0);
    Rows ni_ = apply(a_iu, hu, items0);
    hu = std::move(nu_);
    hi = std::move(ni_);
    for (size_t r = 0; r < nu; ++r)
      for (size_t k = 0; k < d; ++k) su[r][k] += hu[r][k];
    for (size_t r = 0; r < ni; ++r)
      for (size_t k = 0; k < d; ++k) si[r][k] += hi[r][k];
  }
  for (auto& r : su)
    for (auto& x : r) x /= (layers + 1);
  for (auto& r : si)
    for (auto& x : r) x /= (layers + 1);
  return {su, si};
}

// Rank of `positive` by sorting all candidates with ties placed before it.
inline size_t SortRank(double positive, const std::vector<double>& negatives) {
  std::vector<std::pair<double, int>> all;
  for (double s : negatives) all.push_back({s, 0});
  all.push_back({positive, 1});
  std::sort(all.begin(), all.end(), [](auto& a, auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (size_t r = 0; r < all.size(); ++r) {
    if (all[r].second == 1) return r + 1;
  }
  return all.size();
}

struct MetricRow {
  long double mrr = 0, auc = 0, hit5 = 0, ndcg5 = 0, hit10 = 0, ndcg10 = 0;
};

// Per-user metrics averaged; AUC from explicit pairwise counting.
inline MetricRow Metrics(const std::vector<double>& positives,
                         const std::vector<std::vector<double>>& negatives) {
  MetricRow m;
  const size_t n = positives.size();
  for (size_t u = 0; u < n; ++u) {
    size_t rank = 1;
    size_t wins = 0;
    for (double s : negatives[u]) {
      if (s >= positives[u]) ++rank;
      if (positives[u] > s) ++wins;
    }
    m.mrr += 1.0L / rank;
    m.auc += (long double)wins / negatives[u].size();
    const long double gain = 1.0L / std::log2((long double)rank + 1);
    if (rank <= 5) {
      m.hit5 += 1;
      m.ndcg5 += gain;
    }
    if (rank <= 10) {
      m.hit10 += 1;
      m.ndcg10 += gain;
    }
  }
  for (long double* x : {&m.mrr, &m.auc, &m.hit5, &m.ndcg5, &m.hit10, &m.ndcg10}) *x /= n;
  return m;
}

}  // namespace mbcl::oracle

#endif  // MBCL_TESTS_COMMON_ORACLES_H_
