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

#include "mbcl/graph_encoder.h"

#include <cmath>

#include "mbcl/errors.h"

namespace mbcl {
namespace {

std::shared_ptr<const SparseRows> Normalize(const Adjacency& rows,
                                            const Adjacency& cols,
                                            size_t num_cols, GraphNorm norm) {
  auto out = std::make_shared<SparseRows>();
  out->num_rows = rows.num_rows();
  out->num_cols = num_cols;
  out->offsets = rows.offsets;
  out->indices = rows.indices;
  out->weights.resize(rows.indices.size());
  for (size_t r = 0; r < rows.num_rows(); ++r) {
    const size_t deg = rows.degree(r);
    for (size_t k = rows.offsets[r]; k < rows.offsets[r + 1]; ++k) {
      out->weights[k] =
          norm == GraphNorm::kMean
              ? real(1) / real(deg)
              : real(1 / std::sqrt(double(deg) *
                                   double(cols.degree(rows.indices[k]))));
    }
  }
  return out;
}

}  // namespace

GraphEncoder::GraphEncoder(const InteractionGraph& graph, size_t layers,
                           GraphNorm norm)
    : layers_(layers) {
  for (size_t b = 0; b < graph.user_items.size(); ++b) {
    user_side_.push_back(Normalize(graph.user_items[b], graph.item_users[b],
                                   graph.num_items, norm));
    item_side_.push_back(Normalize(graph.item_users[b], graph.user_items[b],
                                   graph.num_users, norm));
  }
}

GraphEncoder::Output GraphEncoder::Propagate(Var user_base, Var item_base,
                                             size_t behavior) const {
  if (behavior >= user_side_.size()) {
    throw IndexError("graph behavior " + std::to_string(behavior) +
                     " out of range");
  }
  const auto& users = user_side_[behavior];
  const auto& items = item_side_[behavior];
  if (user_base.rows() != users->num_rows ||
      item_base.rows() != items->num_rows) {
    throw DimensionError("graph: base tables do not match node counts");
  }
  Var hu = user_base, hv = item_base;
  Var sum_u = user_base, sum_v = item_base;
  for (size_t k = 0; k < layers_; ++k) {
    Var next_u = ops::SparsePropagate(users, hv, user_base);
    Var next_v = ops::SparsePropagate(items, hu, item_base);
    hu = next_u;
    hv = next_v;
    sum_u = ops::Add(sum_u, hu);
    sum_v = ops::Add(sum_v, hv);
  }
  const real inv = real(1) / real(layers_ + 1);
  return {ops::Scale(sum_u, inv), ops::Scale(sum_v, inv)};
}

}  // namespace mbcl
