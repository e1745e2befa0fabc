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

// Data loading and multi-run experiments driven by a RunConfig.

#ifndef MBCL_EXPERIMENT_H_
#define MBCL_EXPERIMENT_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mbcl/config.h"
#include "mbcl/evaluation.h"
#include "mbcl/gradcheck.h"
#include "mbcl/synthetic.h"
#include "mbcl/training.h"

namespace mbcl {

using ProgressSink = std::function<void(const std::string&)>;

// Reads data.log, or generates synthetic data from gen.* when it is empty.
InteractionLog LoadOrGenerateLog(const RunConfig& config,
                                 const WarningSink& warn = nullptr);

// Loads data.splits when set (checking it against the log), otherwise
// computes the split with data.split_seed.
PreparedData PrepareData(const RunConfig& config, const InteractionLog& log);

struct RunRecord {
  std::string label;  // ablation label or sweep value
  uint64_t seed = 0;
  Metrics test;
  std::optional<Metrics> test_cold;
  size_t best_epoch = 0;
};

// Replicate i uses seed + i for training. With synthetic data the generator
// and split seeds advance too, so every replicate sees a fresh dataset.
RunConfig Replicate(const RunConfig& config, size_t index);

// Every ablation row (or the subset in ablate.configs) for each replicate.
std::vector<RunRecord> RunAblation(const RunConfig& config,
                                   const ProgressSink& progress = nullptr);

// One run per sweep value and replicate, full model.
std::vector<RunRecord> RunSweep(const RunConfig& config,
                                const ProgressSink& progress = nullptr);

// label,seed,MRR,AUC,HIT@5,NDCG@5,HIT@10,NDCG@10,cold_NDCG@10,best_epoch
void WriteRunsCsv(const std::vector<RunRecord>& records,
                  const std::string& first_column, const std::string& path);

// Per-label mean and standard deviation over replicates, in first-seen order.
std::string SummaryTable(const std::vector<RunRecord>& records);

// A tiny problem for derivative checks: 8 users, 12 items, three behaviors,
// d = 8, one transformer layer with two heads, one propagation layer.
struct ToyProblem {
  PreparedData data;
  ModelConfig model;
  TrainConfig train;
};
ToyProblem MakeToyProblem(uint64_t seed = 7);

// Checks the total loss of one training batch against finite differences.
GradCheckReport CheckModelGradients(const ToyProblem& toy, real tolerance = 1e-4);

}  // namespace mbcl

#endif  // MBCL_EXPERIMENT_H_
