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

#ifndef MBCL_GRAPH_ENCODER_H_
#define MBCL_GRAPH_ENCODER_H_

#include <memory>
#include <vector>

#include "mbcl/data.h"
#include "mbcl/ops.h"

namespace mbcl {

enum class GraphNorm {
  // Average over neighbors.
  kMean,
  // 1 / sqrt(deg(u) deg(v)) weights.
  kSymmetric,
};

// Weight-free propagation over each behavior's bipartite subgraph:
//   h_u^{k+1} = agg_{v in N_b(u)} h_v^k,  h_v^{k+1} = agg_{u in N_b(v)} h_u^k
// starting from the base tables. Nodes without neighbors keep their base row
// at every layer. The output is the average of layers 0..L.
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(const InteractionGraph& graph, size_t layers,
               GraphNorm norm = GraphNorm::kMean);

  struct Output {
    Var users;  // [num_users x d]
    Var items;  // [num_items x d]
  };

  Output Propagate(Var user_base, Var item_base, size_t behavior) const;

  size_t layers() const { return layers_; }
  size_t num_behaviors() const { return user_side_.size(); }
  const SparseRows& user_adjacency(size_t b) const { return *user_side_.at(b); }
  const SparseRows& item_adjacency(size_t b) const { return *item_side_.at(b); }

 private:
  size_t layers_ = 0;
  std::vector<std::shared_ptr<const SparseRows>> user_side_;
  std::vector<std::shared_ptr<const SparseRows>> item_side_;
};

}  // namespace mbcl

#endif  // MBCL_GRAPH_ENCODER_H_
