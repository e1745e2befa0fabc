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

// Planted-preference multi-behavior log generator.
//
// Users and items get latent vectors; affinity(u, v) is their cosine plus an
// item popularity term, a per-user activity offset and pair noise. A pair is
// recorded under behavior b when affinity exceeds threshold tau_b. Thresholds
// increase toward the target behavior, so every target record is nested in
// all lighter behaviors for the same pair.

#ifndef MBCL_SYNTHETIC_H_
#define MBCL_SYNTHETIC_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mbcl/data.h"

namespace mbcl {

struct GenConfig {
  size_t n_users = 2000;
  size_t n_items = 1000;
  size_t latent_dim = 16;
  BehaviorSchema schema = BehaviorSchema::Default();
  // Mean records per user for each behavior; used to calibrate thresholds
  // when `thresholds` is empty. Must be strictly decreasing.
  std::vector<double> per_user = {20.0, 8.0, 4.0};
  // Explicit tau_b, strictly increasing. Overrides `per_user` when set.
  std::vector<double> thresholds;
  // Latent vectors are drawn around this many shared centres (0 draws them
  // uniformly on the sphere). `cluster_spread` is the per-vector deviation.
  size_t clusters = 32;
  double cluster_spread = 0.7;
  double noise = 0.05;
  double popularity = 0.1;
  double activity = 0.03;
  // Per-user ceiling on click records (0 disables), keeping the most
  // affine items.
  size_t max_per_user = 60;
  double max_zero_target_fraction = 0.1;
  size_t max_attempts = 5;
  uint64_t seed = 1;
};

struct GeneratedData {
  InteractionLog log;
  // Thresholds actually used.
  std::vector<double> thresholds;
  // Noise-free preference: cosine plus popularity, indexed by log indices.
  std::vector<std::vector<double>> user_latent;
  std::vector<std::vector<double>> item_latent;
  std::vector<double> item_popularity;
  uint64_t seed_used = 0;
  size_t attempts = 1;

  double OracleScore(uint32_t user, uint32_t item) const;
};

using WarningSink = std::function<void(const std::string&)>;

// Throws ConfigError on invalid settings and DataError when every attempt
// leaves too many users without a target record.
GeneratedData Generate(const GenConfig& config,
                       const WarningSink& warn = nullptr);

}  // namespace mbcl

#endif  // MBCL_SYNTHETIC_H_
