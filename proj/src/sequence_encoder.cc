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

#include "mbcl/sequence_encoder.h"

#include "mbcl/errors.h"

namespace mbcl {

SequenceEncoder::SequenceEncoder(ParameterStore& store,
                                 const std::string& prefix,
                                 const SequenceEncoderConfig& config,
                                 uint64_t seed)
    : config_(config) {
  const size_t d = config.dim;
  if (d == 0 || config.heads == 0 || d % config.heads != 0) {
    throw ConfigError("dim " + std::to_string(d) + " must be a positive " +
                      "multiple of heads " + std::to_string(config.heads));
  }
  if (config.max_len == 0) throw ConfigError("max_len must be positive");
  input_norm_ = LayerNorm(store, prefix + ".in_ln", d);
  for (size_t l = 0; l < config.layers; ++l) {
    const std::string p = prefix + ".l" + std::to_string(l);
    Block b;
    b.wq = Linear(store, p + ".wq", d, d, seed);
    b.wk = Linear(store, p + ".wk", d, d, seed);
    b.wv = Linear(store, p + ".wv", d, d, seed);
    b.wo = Linear(store, p + ".wo", d, d, seed);
    b.ln1 = LayerNorm(store, p + ".ln1", d);
    b.ff1 = Linear(store, p + ".ff1", d, config.ffn_mult * d, seed);
    b.ff2 = Linear(store, p + ".ff2", config.ffn_mult * d, d, seed);
    b.ln2 = LayerNorm(store, p + ".ln2", d);
    blocks_.push_back(b);
  }
  fallback_ = &store.Add(prefix + ".fallback",
                         NormalInit({1, d}, 0.1, seed, prefix + ".fallback"),
                         /*decay=*/false);
}

Var SequenceEncoder::Encode(
    Tape& tape, Var item_table, Var position_table,
    std::span<const std::span<const uint32_t>> sequences,
    const EncodeOptions& options) const {
  if (sequences.empty()) throw DimensionError("encode: no sequences");
  if (options.pad_to > config_.max_len) {
    throw DimensionError("encode: pad_to exceeds max_len");
  }
  std::vector<Segment> segments;
  std::vector<uint32_t> items;
  std::vector<uint32_t> positions;
  for (const auto& seq : sequences) {
    if (seq.size() > config_.max_len) {
      throw DimensionError("encode: sequence of length " +
                           std::to_string(seq.size()) + " exceeds max_len " +
                           std::to_string(config_.max_len));
    }
    if (options.pad_to > 0 && seq.size() > options.pad_to) {
      throw DimensionError("encode: sequence longer than pad_to");
    }
    const size_t length = std::max(seq.size(), options.pad_to);
    segments.push_back({items.size(), length, seq.size()});
    for (size_t i = 0; i < seq.size(); ++i) {
      items.push_back(seq[i]);
      positions.push_back(uint32_t(seq.size() - 1 - i));
    }
    for (size_t i = seq.size(); i < length; ++i) {
      items.push_back(kZeroRow);
      positions.push_back(kZeroRow);
    }
  }
  Var fallback = tape.Param(*fallback_);
  if (items.empty()) {
    return ops::GatherRows(fallback,
                           std::vector<uint32_t>(sequences.size(), 0));
  }
  Var x = ops::Add(ops::GatherRows(item_table, std::move(items)),
                   ops::GatherRows(position_table, std::move(positions)));
  x = Dropout(tape, input_norm_(tape, x), config_.dropout, options.dropout_rng);
  if (options.attention) options.attention->clear();
  std::vector<real> probs;
  for (const Block& b : blocks_) {
    Var a = ops::PackedAttention(b.wq(tape, x), b.wk(tape, x), b.wv(tape, x),
                                 segments, config_.heads,
                                 options.attention ? &probs : nullptr);
    if (options.attention) {
      options.attention->insert(options.attention->end(), probs.begin(),
                                probs.end());
    }
    a = Dropout(tape, b.wo(tape, a), config_.dropout, options.dropout_rng);
    x = b.ln1(tape, ops::Add(x, a));
    Var f = b.ff2(tape, ops::Relu(b.ff1(tape, x)));
    f = Dropout(tape, f, config_.dropout, options.dropout_rng);
    x = b.ln2(tape, ops::Add(x, f));
  }
  return ops::SegmentPool(x, segments, fallback, config_.pooling);
}

}  // namespace mbcl
