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

#include "mbcl/model.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "mbcl/errors.h"
#include "mbcl/losses.h"
#include "mbcl/ops.h"

namespace mbcl {

// ---------------------------------------------------------------------------
// Components

Components Components::Parse(const std::string& text) {
  std::string lower;
  for (char c : text) {
    lower += (c == ',' ? '+' : char(std::tolower(static_cast<unsigned char>(c))));
  }
  if (lower == "full" || lower == "all") return Components{};
  Components out{false, false, false, false, false};
  std::stringstream in(lower);
  std::string token;
  bool any = false;
  while (std::getline(in, token, '+')) {
    token.erase(std::remove_if(token.begin(), token.end(),
                               [](unsigned char c) { return std::isspace(c); }),
                token.end());
    if (token.empty()) continue;
    any = true;
    if (token == "seq") {
      out.seq = true;
    } else if (token == "graph") {
      out.graph = true;
    } else if (token == "bcl") {
      out.bcl = true;
    } else if (token == "vcl") {
      out.vcl = true;
    } else if (token == "dcl") {
      out.dcl = true;
    } else {
      throw ConfigError("unknown component '" + token +
                        "' (expected seq, graph, bcl, vcl, dcl or full)");
    }
  }
  if (!any) throw ConfigError("empty component list");
  out.Validate();
  return out;
}

std::string Components::Label() const {
  std::vector<std::string> parts;
  if (seq) parts.push_back("seq");
  if (graph) parts.push_back("graph");
  if (bcl) parts.push_back("BCL");
  if (vcl) parts.push_back("VCL");
  if (dcl) parts.push_back("DCL");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "+") + p;
  return out;
}

void Components::Validate() const {
  if (!seq && !graph) throw ConfigError("components need seq or graph");
  if (vcl && !(seq && graph)) {
    throw ConfigError("VCL contrasts the two views and needs seq and graph");
  }
}

void ModelConfig::Validate() const {
  components.Validate();
  if (dim == 0) throw ConfigError("dim must be positive");
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("dim " + std::to_string(dim) +
                      " must be divisible by heads " + std::to_string(heads));
  }
  if (max_seq_len == 0) throw ConfigError("max_seq_len must be positive");
  if (ffn_mult == 0) throw ConfigError("ffn_mult must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (embed_init <= 0) throw ConfigError("embed_init must be positive");
  if (l2 < 0) throw ConfigError("l2 must be non-negative");
  const LossWeights& w = weights;
  for (real x : {w.bpr, w.seq_cl, w.graph_cl, w.view_cl, w.dis_cl, w.beta}) {
    if (!(x >= 0)) throw ConfigError("loss weights must be non-negative");
  }
}

LossValues LossGraph::Values() const {
  auto get = [](Var v) { return v.valid() ? double(v.item()) : 0.0; };
  return {get(total), get(bpr),     get(seq_cl), get(graph_cl),
          get(view_cl), get(dis_cl), get(l2)};
}

// ---------------------------------------------------------------------------
// Model

namespace {

std::vector<uint32_t> SortedUnique(std::vector<uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<uint32_t> PositionsIn(const std::vector<uint32_t>& sorted,
                                  std::span<const uint32_t> keys) {
  std::vector<uint32_t> out;
  out.reserve(keys.size());
  for (uint32_t k : keys) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), k);
    out.push_back(uint32_t(it - sorted.begin()));
  }
  return out;
}

}  // namespace

Model::Model(const ModelConfig& config, const PreparedData& data,
             uint64_t seed)
    : config_(config),
      num_users_(data.num_users),
      num_items_(data.num_items),
      num_behaviors_(data.num_behaviors()) {
  config_.Validate();
  if (num_behaviors_ < 2) throw ConfigError("at least two behaviors needed");
  const Components& c = config_.components;
  const LossWeights& w = config_.weights;
  active_.seq_cl = c.seq && c.bcl && w.seq_cl > 0;
  active_.graph_cl = c.graph && c.bcl && w.graph_cl > 0;
  active_.view_cl = c.seq && c.graph && c.vcl && w.view_cl > 0;
  active_.dis_cl = c.dcl && w.dis_cl > 0;

  const size_t d = config_.dim;
  const size_t nb = num_behaviors_;
  auto embedding = [&](const std::string& name, size_t rows) {
    params_.Add(name, NormalInit({rows, d}, config_.embed_init, seed, name));
  };
  embedding("item_emb", num_items_);
  if (c.graph) embedding("user_emb", num_users_);
  if (c.seq) {
    if (!config_.share_item_table) embedding("seq_item_emb", num_items_);
    if (config_.share_positions) embedding("pos_emb", config_.max_seq_len);
    SequenceEncoderConfig sc;
    sc.dim = d;
    sc.layers = config_.seq_layers;
    sc.heads = config_.heads;
    sc.ffn_mult = config_.ffn_mult;
    sc.max_len = config_.max_seq_len;
    sc.pooling = config_.pooling;
    sc.dropout = config_.dropout;
    for (size_t b = 0; b < nb; ++b) {
      const std::string prefix = "seq" + std::to_string(b);
      if (!config_.share_positions) {
        embedding(prefix + ".pos_emb", config_.max_seq_len);
      }
      seq_.emplace_back(params_, prefix, sc, seed);
    }
    mlp_seq_ = Mlp(params_, "fuse.seq", nb * d, d, d, seed);
  }
  if (c.graph) {
    graph_ = GraphEncoder(data.graph, config_.graph_layers, config_.graph_norm);
    mlp_graph_ = Mlp(params_, "fuse.graph", (nb + 1) * d, d, d, seed);
  }
  if (c.seq && c.graph) {
    mlp_user_ = Mlp(params_, "fuse.user", 2 * d, d, d, seed);
    mlp_item_ = Mlp(params_, "fuse.item", 2 * d, d, d, seed);
  }
  if (active_.seq_cl) proj_seq_ = Mlp(params_, "proj.seq", d, d, d, seed);
  if (active_.graph_cl) proj_graph_ = Mlp(params_, "proj.graph", d, d, d, seed);
  if (active_.view_cl) proj_view_ = Mlp(params_, "proj.view", d, d, d, seed);
  if (active_.dis_cl) proj_dis_ = Mlp(params_, "proj.dis", d, d, d, seed);
}

Parameter& Model::P(const std::string& name) const { return params_.Get(name); }

Var Model::SequenceItemTable(Tape& tape) const {
  return tape.Param(P(config_.share_item_table ? "item_emb" : "seq_item_emb"));
}

Var Model::PositionTable(Tape& tape, size_t behavior) const {
  return tape.Param(P(config_.share_positions
                          ? std::string("pos_emb")
                          : "seq" + std::to_string(behavior) + ".pos_emb"));
}

std::vector<Var> Model::EncodeSequences(Tape& tape, const PreparedData& data,
                                        std::span<const uint32_t> users,
                                        Rng* dropout_rng) const {
  std::vector<Var> reps;
  Var items = SequenceItemTable(tape);
  std::vector<std::span<const uint32_t>> seqs(users.size());
  for (size_t b = 0; b < num_behaviors_; ++b) {
    for (size_t i = 0; i < users.size(); ++i) {
      std::span<const uint32_t> s = data.sequences.at(users[i])[b];
      if (s.size() > config_.max_seq_len) s = s.last(config_.max_seq_len);
      seqs[i] = s;
    }
    EncodeOptions options;
    options.dropout_rng = dropout_rng;
    reps.push_back(
        seq_[b].Encode(tape, items, PositionTable(tape, b), seqs, options));
  }
  return reps;
}

Model::GraphState Model::PropagateGraph(Tape& tape) const {
  GraphState g;
  g.user_base = tape.Param(P("user_emb"));
  g.item_base = tape.Param(P("item_emb"));
  for (size_t b = 0; b < num_behaviors_; ++b) {
    g.outputs.push_back(graph_.Propagate(g.user_base, g.item_base, b));
  }
  return g;
}

Var Model::FuseGraphUsers(Tape& tape, const GraphState& g,
                          const std::vector<uint32_t>& users) const {
  std::vector<Var> parts{ops::GatherRows(g.user_base, users)};
  for (const auto& out : g.outputs) parts.push_back(ops::GatherRows(out.users, users));
  return mlp_graph_(tape, ops::ConcatCols(parts));
}

Var Model::FuseGraphItems(Tape& tape, const GraphState& g,
                          const std::vector<uint32_t>& items) const {
  std::vector<Var> parts{ops::GatherRows(g.item_base, items)};
  for (const auto& out : g.outputs) parts.push_back(ops::GatherRows(out.items, items));
  return mlp_graph_(tape, ops::ConcatCols(parts));
}

Var Model::FuseUsers(Tape& tape, Var seq_view, Var graph_view) const {
  if (!seq_view.valid()) return graph_view;
  if (!graph_view.valid()) return seq_view;
  return mlp_user_(tape, ops::ConcatCols({seq_view, graph_view}));
}

Var Model::FuseItems(Tape& tape, Var base, Var graph_view) const {
  if (!graph_view.valid()) return base;
  if (!config_.components.seq) return graph_view;
  return mlp_item_(tape, ops::ConcatCols({base, graph_view}));
}

LossGraph Model::Loss(Tape& tape, const PreparedData& data, const Batch& batch,
                      Rng* dropout_rng) {
  const size_t n = batch.size();
  if (n == 0) throw DataError("empty batch");
  if (batch.positives.size() != n || batch.negatives.size() != n ||
      batch.auxiliary.size() != n || batch.partner.size() != n) {
    throw DimensionError("batch fields differ in length");
  }
  if (data.num_users != num_users_ || data.num_items != num_items_) {
    throw DimensionError("data does not match the model tables");
  }
  const Components& c = config_.components;
  const LossWeights& w = config_.weights;

  const std::vector<uint32_t> users = SortedUnique(batch.users);
  std::vector<uint32_t> item_keys = batch.positives;
  item_keys.insert(item_keys.end(), batch.negatives.begin(), batch.negatives.end());
  for (uint32_t a : batch.auxiliary) {
    if (a != kNoItem) item_keys.push_back(a);
  }
  const std::vector<uint32_t> items = SortedUnique(std::move(item_keys));
  for (uint32_t v : items) {
    if (v >= num_items_) throw IndexError("batch item out of range");
  }
  for (uint32_t u : users) {
    if (u >= num_users_) throw IndexError("batch user out of range");
  }

  std::vector<Var> seq_reps;
  Var user_seq, user_graph, item_graph;
  GraphState g;
  if (c.seq) {
    seq_reps = EncodeSequences(tape, data, users, dropout_rng);
    user_seq = mlp_seq_(tape, ops::ConcatCols(seq_reps));
  }
  if (c.graph) {
    g = PropagateGraph(tape);
    user_graph = FuseGraphUsers(tape, g, users);
    item_graph = FuseGraphItems(tape, g, items);
  }
  Var u = FuseUsers(tape, user_seq, user_graph);
  Var v = FuseItems(tape, ops::GatherRows(tape.Param(P("item_emb")), items),
                    item_graph);

  const auto entry_users = PositionsIn(users, batch.users);
  const auto entry_pos = PositionsIn(items, batch.positives);
  const auto entry_neg = PositionsIn(items, batch.negatives);
  Var ue = ops::GatherRows(u, entry_users);
  LossGraph out;
  LossGraph::Inputs& in = out.inputs;
  in.users = ue;
  in.positives = ops::GatherRows(v, entry_pos);
  in.negatives = ops::GatherRows(v, entry_neg);
  out.bpr = loss::Bpr(ops::RowDot(ue, in.positives), ops::RowDot(ue, in.negatives));
  Var zero = tape.Constant(Tensor::Scalar(0));
  out.seq_cl = out.graph_cl = out.view_cl = out.dis_cl = zero;

  const uint32_t b1 = batch.b1, b2 = batch.b2;
  if ((active_.seq_cl || active_.graph_cl) &&
      (b1 == b2 || b1 >= num_behaviors_ || b2 >= num_behaviors_)) {
    throw ConfigError("behavior pair must be two distinct behaviors");
  }
  if (active_.seq_cl) {
    std::vector<uint32_t> rows;
    for (size_t i = 0; i < users.size(); ++i) {
      const auto& s = data.sequences[users[i]];
      if (!s[b1].empty() && !s[b2].empty()) rows.push_back(uint32_t(i));
    }
    if (rows.size() >= 2) {
      in.seq_a = proj_seq_(tape, ops::GatherRows(seq_reps[b1], rows));
      in.seq_b = proj_seq_(tape, ops::GatherRows(seq_reps[b2], rows));
      out.seq_cl = loss::Contrast(in.seq_a, in.seq_b);
    }
  }
  if (active_.graph_cl) {
    std::vector<uint32_t> ids;
    for (uint32_t user : users) {
      if (data.graph.user_items[b1].degree(user) > 0 &&
          data.graph.user_items[b2].degree(user) > 0) {
        ids.push_back(user);
      }
    }
    if (ids.size() >= 2) {
      in.graph_a = proj_graph_(tape, ops::GatherRows(g.outputs[b1].users, ids));
      in.graph_b = proj_graph_(tape, ops::GatherRows(g.outputs[b2].users, ids));
      out.graph_cl = loss::Contrast(in.graph_a, in.graph_b);
    }
  }
  if (active_.view_cl) {
    in.view_a = proj_view_(tape, user_seq);
    in.view_b = proj_view_(tape, user_graph);
    out.view_cl = loss::Contrast(in.view_a, in.view_b);
  }
  if (active_.dis_cl) {
    std::vector<uint32_t> au, ai, aj, ak;
    for (size_t r = 0; r < n; ++r) {
      if (batch.auxiliary[r] == kNoItem || batch.partner[r] < 0) continue;
      const size_t k = size_t(batch.partner[r]);
      if (k >= n) throw IndexError("batch partner out of range");
      au.push_back(entry_users[r]);
      ai.push_back(entry_pos[r]);
      aj.push_back(PositionsIn(items, {&batch.auxiliary[r], 1})[0]);
      ak.push_back(entry_pos[k]);
    }
    if (!au.empty()) {
      Var pu = proj_dis_(tape, u);
      Var pv = proj_dis_(tape, v);
      in.dis_u = ops::GatherRows(pu, au);
      in.dis_i = ops::GatherRows(pv, ai);
      in.dis_j = ops::GatherRows(pv, aj);
      in.dis_k = ops::GatherRows(pv, ak);
      out.dis_cl = loss::Distinction(in.dis_u, in.dis_i, in.dis_j, in.dis_k, w.beta);
    }
  }
  out.l2 = loss::L2Penalty(tape, params_, config_.l2);

  Var total = ops::Scale(out.bpr, w.bpr);
  auto add = [&](bool on, Var term, real weight) {
    if (on) total = ops::Add(total, ops::Scale(term, weight));
  };
  add(active_.seq_cl, out.seq_cl, w.seq_cl);
  add(active_.graph_cl, out.graph_cl, w.graph_cl);
  add(active_.view_cl, out.view_cl, w.view_cl);
  add(active_.dis_cl, out.dis_cl, w.dis_cl);
  out.total = ops::Add(total, out.l2);
  return out;
}

Tensor Model::UserRepresentations(const PreparedData& data,
                                  std::span<const uint32_t> users) const {
  const Components& c = config_.components;
  const size_t d = config_.dim;
  Tensor out({std::max<size_t>(users.size(), 1), d});
  if (users.empty()) return out;
  std::vector<Tensor> graph_tables;
  Tensor user_base;
  if (c.graph) {
    Tape tape(false);
    GraphState g = PropagateGraph(tape);
    user_base = g.user_base.value();
    for (const auto& o : g.outputs) graph_tables.push_back(o.users.value());
  }
  constexpr size_t kChunk = 256;
  for (size_t start = 0; start < users.size(); start += kChunk) {
    const size_t count = std::min(kChunk, users.size() - start);
    std::vector<uint32_t> chunk(users.begin() + start,
                                users.begin() + start + count);
    Tape tape(false);
    Var user_seq, user_graph;
    if (c.seq) {
      user_seq = mlp_seq_(tape, ops::ConcatCols(
                                    EncodeSequences(tape, data, chunk, nullptr)));
    }
    if (c.graph) {
      std::vector<Var> parts{ops::GatherRows(tape.Constant(user_base), chunk)};
      for (const Tensor& t : graph_tables) {
        parts.push_back(ops::GatherRows(tape.Constant(t), chunk));
      }
      user_graph = mlp_graph_(tape, ops::ConcatCols(parts));
    }
    const Tensor& u = FuseUsers(tape, user_seq, user_graph).value();
    std::copy(u.data(), u.data() + count * d, out.data() + start * d);
  }
  return out;
}

Tensor Model::ItemRepresentations() const {
  Tape tape(false);
  std::vector<uint32_t> all(num_items_);
  for (uint32_t i = 0; i < num_items_; ++i) all[i] = i;
  Var item_graph;
  if (config_.components.graph) {
    item_graph = FuseGraphItems(tape, PropagateGraph(tape), all);
  }
  return FuseItems(tape, tape.Param(P("item_emb")), item_graph).value();
}

real Model::Score(const Tensor& users, size_t user_row, const Tensor& items,
                  size_t item_row) {
  const size_t d = users.cols();
  const real* a = users.data() + user_row * d;
  const real* b = items.data() + item_row * d;
  real s = 0;
  for (size_t k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

}  // namespace mbcl
