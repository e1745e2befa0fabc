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

// Flat key=value run configuration shared by the command-line tool and the
// Python module.
//
// File format: one `key = value` per line; `#` starts a comment; blank lines
// are ignored. Later assignments win. Lists are comma-separated.

#ifndef MBCL_CONFIG_H_
#define MBCL_CONFIG_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mbcl/data.h"
#include "mbcl/model.h"
#include "mbcl/synthetic.h"
#include "mbcl/training.h"

namespace mbcl {

// Environment variable naming the config file used when none is given.
inline constexpr const char* kConfigEnvVar = "MBCL_CONFIG";

struct RunConfig {
  // Input log; empty means "generate synthetic data from gen.*".
  std::string data_log;
  // Precomputed split file; empty means "compute from the log".
  std::string data_splits;
  BehaviorSchema schema = BehaviorSchema::Default();
  size_t min_user_interactions = 0;
  size_t min_item_interactions = 0;
  size_t num_negatives = 99;
  uint64_t split_seed = 1;

  GenConfig gen;
  ModelConfig model;
  TrainConfig train;

  std::string run_dir = "runs/default";
  std::string gen_out;

  std::string eval_segment = "all";  // overall, cold_start or all
  std::string checkpoint;            // empty: <run_dir>/best.ckpt

  size_t seeds = 1;
  std::vector<std::string> ablate_configs;  // empty: all eight
  std::string sweep_axis = "lambda_o";      // lambda_o or dim
  std::vector<double> sweep_values;         // empty: the standard grid

  void Validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

// Every accepted key in documentation order.
const std::vector<ConfigKey>& ConfigKeys();

// Throws ConfigError for unknown keys or unparsable values.
void SetConfigValue(RunConfig& config, const std::string& key,
                    const std::string& value);
std::string GetConfigValue(const RunConfig& config, const std::string& key);

// Splits `key = value` lines into trimmed pairs without interpreting them.
std::vector<std::pair<std::string, std::string>> ParseConfigText(
    const std::string& text, const std::string& source = "<config>");
std::string ReadConfigFile(const std::string& path);

// Applies `key = value` lines. `source` names the input in error messages.
void ApplyConfigText(RunConfig& config, const std::string& text,
                     const std::string& source = "<config>");
void ApplyConfigFile(RunConfig& config, const std::string& path);

// All keys with their effective values, one `key=value` per line. Feeding
// the output back through ApplyConfigText reproduces the configuration.
std::string DumpConfig(const RunConfig& config);
std::map<std::string, std::string> ConfigMap(const RunConfig& config);

// Standard sweep grids.
std::vector<double> DefaultSweepValues(const std::string& axis);

}  // namespace mbcl

#endif  // MBCL_CONFIG_H_
