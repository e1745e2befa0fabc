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

// The two-view multi-behavior model and its training objective.
//
// Sequence view: one transformer per behavior, fused by MLP^s.
// Graph view: per-behavior propagation from base tables u0/v0, fused together
// with u0 (or v0 for items) by MLP^g.
// Users: u = MLP^U(u_s || u_g). Items: v = MLP^V(v0 || v_g). Score = u.v.
// With a single view enabled, u and v come from that view alone (v = v0 for
// the sequence view).

#ifndef MBCL_MODEL_H_
#define MBCL_MODEL_H_

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mbcl/data.h"
#include "mbcl/graph_encoder.h"
#include "mbcl/nn.h"
#include "mbcl/sequence_encoder.h"

namespace mbcl {

struct Components {
  bool seq = true;
  bool graph = true;
  bool bcl = true;
  bool vcl = true;
  bool dcl = true;

  // Accepts names joined by '+' or ',' (case-insensitive): seq, graph, bcl,
  // vcl, dcl, or "full". Throws ConfigError.
  static Components Parse(const std::string& text);
  // Canonical label such as "seq+graph+BCL".
  std::string Label() const;
  void Validate() const;
  bool operator==(const Components&) const = default;
};

struct LossWeights {
  real bpr = 1.0;
  real seq_cl = 0.2;
  real graph_cl = 0.2;
  real view_cl = 0.2;
  real dis_cl = 0.05;
  real beta = 1.0;
};

struct ModelConfig {
  size_t dim = 64;
  size_t seq_layers = 2;
  size_t heads = 2;
  size_t graph_layers = 2;
  size_t max_seq_len = 50;
  size_t ffn_mult = 4;
  Pooling pooling = Pooling::kMean;
  GraphNorm graph_norm = GraphNorm::kMean;
  bool share_item_table = true;
  bool share_positions = true;
  real dropout = 0;
  real embed_init = 0.1;
  real l2 = 1e-4;
  Components components;
  LossWeights weights;

  void Validate() const;
};

inline constexpr uint32_t kNoItem = std::numeric_limits<uint32_t>::max();

// One mini-batch of target-behavior training pairs.
struct Batch {
  std::vector<uint32_t> users;
  std::vector<uint32_t> positives;
  std::vector<uint32_t> negatives;
  // Auxiliary-only item per entry, or kNoItem.
  std::vector<uint32_t> auxiliary;
  // Entry whose positive serves as v_k, or -1.
  std::vector<int32_t> partner;
  // Behavior pair for the behavior-level contrast.
  uint32_t b1 = 0;
  uint32_t b2 = 1;

  size_t size() const { return users.size(); }
};

struct LossValues {
  double total = 0;
  double bpr = 0;
  double seq_cl = 0;
  double graph_cl = 0;
  double view_cl = 0;
  double dis_cl = 0;
  double l2 = 0;
};

struct LossGraph {
  Var total;
  Var bpr;
  Var seq_cl;
  Var graph_cl;
  Var view_cl;
  Var dis_cl;
  Var l2;

  // Rows fed to each loss term; invalid when the term was skipped.
  struct Inputs {
    Var users, positives, negatives;
    Var seq_a, seq_b;
    Var graph_a, graph_b;
    Var view_a, view_b;
    Var dis_u, dis_i, dis_j, dis_k;
  } inputs;

  LossValues Values() const;
};

// Which loss terms are computed. A term with zero weight is off.
struct ActiveTerms {
  bool seq_cl = false;
  bool graph_cl = false;
  bool view_cl = false;
  bool dis_cl = false;
};

class Model {
 public:
  // `data` fixes table sizes and the propagation graph; Loss and the
  // representation functions must be called with the same data.
  Model(const ModelConfig& config, const PreparedData& data, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const ActiveTerms& active() const { return active_; }
  const GraphEncoder& graph_encoder() const { return graph_; }
  const SequenceEncoder& sequence_encoder(size_t b) const { return seq_.at(b); }

  LossGraph Loss(Tape& tape, const PreparedData& data, const Batch& batch,
                 Rng* dropout_rng = nullptr);

  // Final representations on a gradient-free tape.
  Tensor UserRepresentations(const PreparedData& data,
                             std::span<const uint32_t> users) const;
  Tensor ItemRepresentations() const;

  // u.v for each candidate given precomputed rows.
  static real Score(const Tensor& users, size_t user_row, const Tensor& items,
                    size_t item_row);

 private:
  struct GraphState {
    Var user_base;
    Var item_base;
    std::vector<GraphEncoder::Output> outputs;
  };

  Var SequenceItemTable(Tape& tape) const;
  Var PositionTable(Tape& tape, size_t behavior) const;
  std::vector<Var> EncodeSequences(Tape& tape, const PreparedData& data,
                                   std::span<const uint32_t> users,
                                   Rng* dropout_rng) const;
  GraphState PropagateGraph(Tape& tape) const;
  Var FuseGraphUsers(Tape& tape, const GraphState& g,
                     const std::vector<uint32_t>& users) const;
  Var FuseGraphItems(Tape& tape, const GraphState& g,
                     const std::vector<uint32_t>& items) const;
  Var FuseUsers(Tape& tape, Var seq_view, Var graph_view) const;
  Var FuseItems(Tape& tape, Var base, Var graph_view) const;

  Parameter& P(const std::string& name) const;

  ModelConfig config_;
  size_t num_users_ = 0;
  size_t num_items_ = 0;
  size_t num_behaviors_ = 0;
  ActiveTerms active_;
  // Mutable so const methods can bind parameters to gradient-free tapes.
  mutable ParameterStore params_;
  std::vector<SequenceEncoder> seq_;
  GraphEncoder graph_;
  Mlp mlp_seq_, mlp_graph_, mlp_user_, mlp_item_;
  Mlp proj_seq_, proj_graph_, proj_view_, proj_dis_;
};

}  // namespace mbcl

#endif  // MBCL_MODEL_H_
