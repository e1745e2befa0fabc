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

// Bidirectional transformer over one behavior's item sequences.
//
// Tokens are item embeddings plus positional embeddings, where position 0 is
// the most recent item. Sequences are packed into one matrix; padding goes
// after the valid tokens and is masked out of attention and pooling.

#ifndef MBCL_SEQUENCE_ENCODER_H_
#define MBCL_SEQUENCE_ENCODER_H_

#include <span>
#include <string>
#include <vector>

#include "mbcl/nn.h"
#include "mbcl/ops.h"

namespace mbcl {

struct SequenceEncoderConfig {
  size_t dim = 64;
  size_t layers = 2;
  size_t heads = 2;
  size_t ffn_mult = 4;
  size_t max_len = 50;
  Pooling pooling = Pooling::kMean;
  real dropout = 0;
};

struct EncodeOptions {
  // Pad every sequence to this many tokens (0: no padding).
  size_t pad_to = 0;
  // Receives the attention weights of every layer, concatenated in layer
  // order, each in the PackedAttention layout.
  std::vector<real>* attention = nullptr;
  Rng* dropout_rng = nullptr;
};

class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(ParameterStore& store, const std::string& prefix,
                  const SequenceEncoderConfig& config, uint64_t seed);

  // One [d] row per sequence. Each sequence is in chronological order, most
  // recent last, with at most max_len items. Empty sequences map to the
  // learned fallback vector.
  Var Encode(Tape& tape, Var item_table, Var position_table,
             std::span<const std::span<const uint32_t>> sequences,
             const EncodeOptions& options = {}) const;

  const SequenceEncoderConfig& config() const { return config_; }
  Parameter& fallback() const { return *fallback_; }

 private:
  struct Block {
    Linear wq, wk, wv, wo;
    LayerNorm ln1;
    Linear ff1, ff2;
    LayerNorm ln2;
  };

  SequenceEncoderConfig config_;
  LayerNorm input_norm_;
  std::vector<Block> blocks_;
  Parameter* fallback_ = nullptr;
};

}  // namespace mbcl

#endif  // MBCL_SEQUENCE_ENCODER_H_
