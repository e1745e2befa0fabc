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

// Interaction logs, leave-one-out splits, per-behavior sequences and the
// multi-relation user-item graph.

#ifndef MBCL_DATA_H_
#define MBCL_DATA_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbcl/random.h"

namespace mbcl {

// Ordered behavior labels. The last label is the target behavior.
struct BehaviorSchema {
  std::vector<std::string> labels;

  static BehaviorSchema Default() { return {{"click", "cart", "buy"}}; }

  size_t size() const { return labels.size(); }
  uint32_t target() const { return uint32_t(labels.size() - 1); }
  std::optional<uint32_t> Find(const std::string& label) const;
  // Throws SchemaError unless there are >= 2 distinct labels.
  void Validate() const;
};

struct Interaction {
  uint32_t user = 0;
  uint32_t item = 0;
  uint32_t behavior = 0;
  int64_t timestamp = 0;
};

struct InteractionLog {
  BehaviorSchema schema;
  // Input order; ties in timestamp are broken by this order.
  std::vector<Interaction> records;
  // Raw identifiers by contiguous index.
  std::vector<std::string> user_labels;
  std::vector<std::string> item_labels;

  size_t num_users() const { return user_labels.size(); }
  size_t num_items() const { return item_labels.size(); }
  std::vector<size_t> CountsPerBehavior() const;
};

// Optional core filtering, applied repeatedly until stable. Zero disables.
struct LoadOptions {
  size_t min_user_interactions = 0;
  size_t min_item_interactions = 0;
};

// Parses `user \t item \t behavior \t timestamp` lines. Raw ids are remapped
// to contiguous indices in order of first appearance (after filtering).
InteractionLog ParseLog(std::istream& in, const BehaviorSchema& schema,
                        const LoadOptions& options = {});
InteractionLog LoadLog(const std::string& path, const BehaviorSchema& schema,
                       const LoadOptions& options = {});

void WriteLogTsv(const InteractionLog& log, std::ostream& out);
void WriteLogTsv(const InteractionLog& log, const std::string& path);
// Sidecar JSON: behavior list, counts and index mappings.
void WriteSidecar(const InteractionLog& log, const std::string& path);
BehaviorSchema ReadSidecarSchema(const std::string& path);

// Sorted, deduplicated adjacency lists in CSR form.
struct Adjacency {
  std::vector<uint32_t> offsets;
  std::vector<uint32_t> indices;

  size_t num_rows() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const uint32_t> neighbors(size_t row) const {
    return {indices.data() + offsets[row], offsets[row + 1] - offsets[row]};
  }
  size_t degree(size_t row) const { return offsets[row + 1] - offsets[row]; }
};

// Multi-relation bipartite graph over train-split records only.
struct InteractionGraph {
  size_t num_users = 0;
  size_t num_items = 0;
  // Indexed by behavior.
  std::vector<Adjacency> user_items;
  std::vector<Adjacency> item_users;

  bool HasEdge(uint32_t user, uint32_t item, uint32_t behavior) const;
  size_t NumEdges(uint32_t behavior) const;
};

struct UserSplit {
  std::optional<uint32_t> test_item;
  std::optional<uint32_t> valid_item;
  // Target-behavior records left in the train split.
  uint32_t train_target_count = 0;
  // Fewer than 3 target-behavior records in the train split.
  bool cold_start = false;
};

inline constexpr size_t kColdStartThreshold = 3;
inline constexpr int kSplitFormatVersion = 1;

// Held-out items and frozen evaluation negatives per user.
struct SplitSpec {
  uint64_t seed = 0;
  size_t num_negatives = 99;
  std::vector<UserSplit> users;
  std::vector<std::vector<uint32_t>> valid_negatives;
  std::vector<std::vector<uint32_t>> test_negatives;

  std::string ToJson() const;
  static SplitSpec FromJson(const std::string& text);
  void Save(const std::string& path) const;
  static SplitSpec Load(const std::string& path);
};

enum class NegativeScope {
  // Exclude every item the user interacted with under the target behavior,
  // in any split.
  kTargetAnySplit,
  // Exclude only train-split target items.
  kTargetTrainOnly,
};

// Training structures materialized from a log and a split.
struct PreparedData {
  BehaviorSchema schema;
  size_t num_users = 0;
  size_t num_items = 0;
  size_t max_seq_len = 50;
  // [user][behavior] items in nondecreasing timestamp order, most recent last.
  std::vector<std::vector<std::vector<uint32_t>>> sequences;
  InteractionGraph graph;
  SplitSpec split;
  // Sorted unique train-split target items (S+).
  std::vector<std::vector<uint32_t>> train_positives;
  // Sorted unique target items in any split.
  std::vector<std::vector<uint32_t>> target_items;
  // Sorted unique train-split auxiliary items that are never target items.
  std::vector<std::vector<uint32_t>> auxiliary_only;

  size_t num_behaviors() const { return schema.size(); }
  bool IsTargetItem(uint32_t user, uint32_t item) const;
  std::span<const uint32_t> Excluded(uint32_t user, NegativeScope scope) const;
  std::vector<uint32_t> EvaluableUsers(bool cold_start_only) const;
  std::vector<uint32_t> ValidationUsers() const;
};

// Leave-one-out: test = last target interaction, validation = the one before
// it (only when the user has >= 3 distinct target items). Negatives for both
// are drawn once with `seed`.
SplitSpec ComputeSplitSpec(const InteractionLog& log, uint64_t seed,
                           size_t num_negatives = 99);

// Removes every record of a (user, held-out item) pair, then builds
// sequences (truncated to the most recent `max_seq_len`) and the graph.
PreparedData Materialize(const InteractionLog& log, const SplitSpec& split,
                         size_t max_seq_len);

inline PreparedData BuildSplits(const InteractionLog& log, size_t max_seq_len,
                                uint64_t seed, size_t num_negatives = 99) {
  return Materialize(log, ComputeSplitSpec(log, seed, num_negatives),
                     max_seq_len);
}

// k distinct items in [0, num_items) outside the sorted `excluded` set.
std::vector<uint32_t> SampleNegatives(std::span<const uint32_t> excluded,
                                      size_t num_items, size_t k, Rng& rng);

inline std::vector<uint32_t> SampleNegatives(const PreparedData& data,
                                             uint32_t user, size_t k,
                                             NegativeScope scope, Rng& rng) {
  return SampleNegatives(data.Excluded(user, scope), data.num_items, k, rng);
}

// Throws VerificationError if a held-out item appears in any train structure.
void VerifyNoLeak(const PreparedData& data);

}  // namespace mbcl

#endif  // MBCL_DATA_H_
