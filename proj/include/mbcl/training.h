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

#ifndef MBCL_TRAINING_H_
#define MBCL_TRAINING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbcl/data.h"
#include "mbcl/evaluation.h"
#include "mbcl/model.h"

namespace mbcl {

struct TrainConfig {
  size_t batch_size = 256;
  real learning_rate = 1e-3;
  real adam_beta1 = 0.9;
  real adam_beta2 = 0.999;
  real adam_eps = 1e-8;
  size_t max_epochs = 50;
  size_t patience = 10;
  uint64_t seed = 1;
  NegativeScope negative_scope = NegativeScope::kTargetTrainOnly;

  void Validate() const;
};

// Shuffled target-behavior training pairs cut into batches. The same
// (data, config, epoch) always yields the same batches.
std::vector<Batch> MakeBatches(const PreparedData& data,
                               const TrainConfig& config, size_t epoch);

class Adam {
 public:
  Adam(const ParameterStore& params, const TrainConfig& config);

  // Applies one update from Parameter::grad. Throws NumericError naming the
  // first parameter with a non-finite gradient.
  void Step(ParameterStore& params);

  uint64_t steps() const { return steps_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void Restore(uint64_t steps, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  real lr_, beta1_, beta2_, eps_;
  uint64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct EpochRecord {
  size_t epoch = 0;  // 1-based
  LossValues loss;   // mean over batches
  std::optional<Metrics> valid;
  bool improved = false;
  double seconds = 0;

  // One JSON object. Wall time is omitted when `with_time` is false.
  std::string ToJson(bool with_time = true) const;
};

// Training state stored next to the parameters.
struct CheckpointInfo {
  int version = 1;
  std::map<std::string, std::string> config;
  size_t epoch = 0;
  double best_metric = -1;
  size_t best_epoch = 0;
  size_t bad_epochs = 0;
  std::vector<std::string> history;  // EpochRecord JSON lines
};

// Binary container: magic, format version, JSON header, raw parameter values
// and (optionally) Adam moments, all little-endian doubles.
void SaveCheckpoint(const std::string& path, const ParameterStore& params,
                    const Adam* adam, const CheckpointInfo& info);
// Reads the header only.
CheckpointInfo ReadCheckpointInfo(const std::string& path);
// Loads values into a store with matching names and shapes; restores Adam
// moments when `adam` is non-null and the file has them.
CheckpointInfo LoadCheckpoint(const std::string& path, ParameterStore& params,
                              Adam* adam);

struct TrainResult {
  std::vector<EpochRecord> history;
  size_t best_epoch = 0;
  double best_valid_ndcg10 = -1;
  bool stopped_early = false;
};

struct TrainHooks {
  // Called after each epoch.
  std::function<void(const EpochRecord&)> on_epoch;
  // Ends training after the current epoch when it returns true.
  std::function<bool(const EpochRecord&)> should_stop;
  // Directory for history.jsonl, last.ckpt and best.ckpt; empty disables.
  std::string run_dir;
  // Flat config echoed into checkpoints.
  std::map<std::string, std::string> config_echo;
};

class Trainer {
 public:
  Trainer(const ModelConfig& model_config, const TrainConfig& train_config,
          const PreparedData& data);

  // Continues from last.ckpt: parameters, Adam state, epoch counter, early
  // stopping state and history.
  void Resume(const std::string& checkpoint_path);

  // Trains until max_epochs or early stopping, then restores the parameters
  // of the best validation epoch.
  TrainResult Run(const TrainHooks& hooks = {});

  // One optimization step on `batch`; returns the loss values.
  LossValues Step(const Batch& batch, Rng* dropout_rng);

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  const Adam& optimizer() const { return adam_; }
  size_t epoch() const { return epoch_; }

 private:
  ModelConfig model_config_;
  TrainConfig config_;
  const PreparedData& data_;
  Model model_;
  Adam adam_;
  size_t epoch_ = 0;
  double best_metric_ = -1;
  size_t best_epoch_ = 0;
  size_t bad_epochs_ = 0;
  std::vector<EpochRecord> history_;
  std::vector<std::string> resumed_history_;
  std::vector<Tensor> best_values_;
};

// Train, then evaluate on the test split (overall and cold-start segments).
struct ExperimentResult {
  TrainResult train;
  Metrics test;
  std::optional<Metrics> test_cold;
};
ExperimentResult RunExperiment(const ModelConfig& model_config,
                               const TrainConfig& train_config,
                               const PreparedData& data,
                               const TrainHooks& hooks = {});

// The eight ablation configurations in table order.
struct AblationSpec {
  std::string label;
  Components components;
};
std::vector<AblationSpec> AblationConfigurations();

}  // namespace mbcl

#endif  // MBCL_TRAINING_H_
