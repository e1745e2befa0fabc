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

#include "mbcl/training.h"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "mbcl/errors.h"

namespace mbcl {

using ojson = nlohmann::ordered_json;

void TrainConfig::Validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) ||
      !(adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) throw ConfigError("adam_eps must be positive");
}

// ---------------------------------------------------------------------------
// Batches

std::vector<Batch> MakeBatches(const PreparedData& data,
                               const TrainConfig& config, size_t epoch) {
  config.Validate();
  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  for (uint32_t u = 0; u < data.num_users; ++u) {
    for (uint32_t v : data.train_positives[u]) pairs.emplace_back(u, v);
  }
  if (pairs.empty()) throw DataError("empty train set: no target-behavior pairs");
  Rng rng(DeriveSeed(config.seed, "batches/" + std::to_string(epoch)));
  rng.Shuffle(pairs);
  const size_t nb = data.num_behaviors();
  std::vector<Batch> batches;
  for (size_t start = 0; start < pairs.size(); start += config.batch_size) {
    const size_t n = std::min(config.batch_size, pairs.size() - start);
    Batch b;
    for (size_t r = 0; r < n; ++r) {
      const auto [u, v] = pairs[start + r];
      b.users.push_back(u);
      b.positives.push_back(v);
      b.negatives.push_back(
          SampleNegatives(data, u, 1, config.negative_scope, rng)[0]);
      const auto& aux = data.auxiliary_only[u];
      b.auxiliary.push_back(aux.empty() ? kNoItem
                                        : aux[rng.UniformInt(aux.size())]);
    }
    for (size_t r = 0; r < n; ++r) {
      int32_t partner = -1;
      const size_t offset = rng.UniformInt(n);
      for (size_t t = 0; t < n; ++t) {
        const size_t k = (offset + t) % n;
        if (b.users[k] != b.users[r]) {
          partner = int32_t(k);
          break;
        }
      }
      b.partner.push_back(partner);
    }
    b.b1 = uint32_t(rng.UniformInt(nb));
    b.b2 = uint32_t(rng.UniformInt(nb - 1));
    if (b.b2 >= b.b1) ++b.b2;
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(const ParameterStore& params, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_eps) {
  for (size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params[i].value.shape());
    v_.emplace_back(params[i].value.shape());
  }
}

void Adam::Step(ParameterStore& params) {
  if (params.size() != m_.size()) {
    throw DimensionError("optimizer built for a different parameter set");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = params[i].grad;
    if (!g.AllFinite()) {
      throw NumericError("non-finite gradient in parameter '" +
                         params[i].name + "'");
    }
  }
  ++steps_;
  const real c1 = 1 - std::pow(beta1_, real(steps_));
  const real c2 = 1 - std::pow(beta2_, real(steps_));
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    real* theta = p.value.data();
    const real* g = p.grad.data();
    real* m = m_[i].data();
    real* v = v_[i].data();
    for (size_t k = 0; k < p.value.size(); ++k) {
      m[k] = beta1_ * m[k] + (1 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1 - beta2_) * g[k] * g[k];
      theta[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

void Adam::Restore(uint64_t steps, std::vector<Tensor> m,
                   std::vector<Tensor> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw SchemaError("optimizer state does not match parameters");
  }
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i].shape() != m_[i].shape() || v[i].shape() != v_[i].shape()) {
      throw SchemaError("optimizer moment shape mismatch");
    }
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

// ---------------------------------------------------------------------------
// History and checkpoints

namespace {

ojson MetricsObject(const Metrics& m) {
  ojson j;
  const auto values = MetricValues(m);
  for (size_t k = 0; k < values.size(); ++k) j[kMetricNames[k]] = values[k];
  j["users"] = m.users;
  return j;
}

constexpr char kMagic[8] = {'M', 'B', 'C', 'L', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;

void WriteTensor(std::ostream& out, const Tensor& t) {
  std::vector<double> buf(t.values().begin(), t.values().end());
  out.write(reinterpret_cast<const char*>(buf.data()),
            std::streamsize(buf.size() * sizeof(double)));
}

void ReadTensor(std::istream& in, Tensor& t) {
  std::vector<double> buf(t.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          std::streamsize(buf.size() * sizeof(double)));
  if (!in) throw SchemaError("checkpoint truncated");
  for (size_t k = 0; k < buf.size(); ++k) t[k] = real(buf[k]);
}

ojson ReadHeader(std::istream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw SchemaError(path + " is not an mbcl checkpoint");
  }
  uint32_t version = 0;
  uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || version != kCheckpointVersion) {
    throw SchemaError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  std::string text(length, '\0');
  in.read(text.data(), std::streamsize(length));
  if (!in) throw SchemaError("checkpoint header truncated");
  return ojson::parse(text);
}

CheckpointInfo InfoFromHeader(const ojson& h) {
  CheckpointInfo info;
  info.version = h.at("version").get<int>();
  for (const auto& [k, v] : h.at("config").items()) {
    info.config[k] = v.get<std::string>();
  }
  info.epoch = h.at("epoch").get<size_t>();
  info.best_metric = h.at("best_metric").get<double>();
  info.best_epoch = h.at("best_epoch").get<size_t>();
  info.bad_epochs = h.at("bad_epochs").get<size_t>();
  for (const auto& line : h.at("history")) info.history.push_back(line.dump());
  return info;
}

}  // namespace

std::string EpochRecord::ToJson(bool with_time) const {
  ojson j;
  j["epoch"] = epoch;
  j["loss"] = {{"total", loss.total},     {"bpr", loss.bpr},
               {"seq_cl", loss.seq_cl},   {"graph_cl", loss.graph_cl},
               {"view_cl", loss.view_cl}, {"dis_cl", loss.dis_cl},
               {"l2", loss.l2}};
  j["valid"] = valid ? MetricsObject(*valid) : ojson(nullptr);
  j["improved"] = improved;
  if (with_time) j["seconds"] = seconds;
  return j.dump();
}

void SaveCheckpoint(const std::string& path, const ParameterStore& params,
                    const Adam* adam, const CheckpointInfo& info) {
  ojson h;
  h["format"] = "mbcl-checkpoint";
  h["version"] = info.version;
  h["config"] = ojson::object();
  for (const auto& [k, v] : info.config) h["config"][k] = v;
  h["epoch"] = info.epoch;
  h["best_metric"] = info.best_metric;
  h["best_epoch"] = info.best_epoch;
  h["bad_epochs"] = info.bad_epochs;
  h["history"] = ojson::array();
  for (const auto& line : info.history) h["history"].push_back(ojson::parse(line));
  h["params"] = ojson::array();
  for (size_t i = 0; i < params.size(); ++i) {
    h["params"].push_back(
        {{"name", params[i].name}, {"shape", params[i].value.shape()}});
  }
  h["adam_steps"] = adam ? ojson(adam->steps()) : ojson(nullptr);
  const std::string header = h.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.write(kMagic, 8);
    const uint32_t version = kCheckpointVersion;
    const uint64_t length = header.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&length), sizeof(length));
    out.write(header.data(), std::streamsize(header.size()));
    for (size_t i = 0; i < params.size(); ++i) WriteTensor(out, params[i].value);
    if (adam) {
      for (const Tensor& t : adam->first_moments()) WriteTensor(out, t);
      for (const Tensor& t : adam->second_moments()) WriteTensor(out, t);
    }
    if (!out) throw DataError("failed writing " + path);
  }
  std::filesystem::rename(tmp, path);
}

CheckpointInfo ReadCheckpointInfo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return InfoFromHeader(ReadHeader(in, path));
}

CheckpointInfo LoadCheckpoint(const std::string& path, ParameterStore& params,
                              Adam* adam) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  const ojson h = ReadHeader(in, path);
  const auto& listed = h.at("params");
  if (listed.size() != params.size()) {
    throw SchemaError("checkpoint has " + std::to_string(listed.size()) +
                      " parameters, model has " + std::to_string(params.size()));
  }
  std::vector<Tensor> values;
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string name = listed[i].at("name").get<std::string>();
    const Shape shape = listed[i].at("shape").get<Shape>();
    if (name != params[i].name || shape != params[i].value.shape()) {
      throw SchemaError("checkpoint parameter " + name + " " +
                        ShapeToString(shape) + " does not match model " +
                        params[i].name + " " +
                        ShapeToString(params[i].value.shape()));
    }
    Tensor t(shape);
    ReadTensor(in, t);
    values.push_back(std::move(t));
  }
  for (size_t i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
  if (adam && !h.at("adam_steps").is_null()) {
    std::vector<Tensor> m, v;
    for (size_t i = 0; i < params.size(); ++i) {
      m.emplace_back(params[i].value.shape());
      ReadTensor(in, m.back());
    }
    for (size_t i = 0; i < params.size(); ++i) {
      v.emplace_back(params[i].value.shape());
      ReadTensor(in, v.back());
    }
    adam->Restore(h.at("adam_steps").get<uint64_t>(), std::move(m),
                  std::move(v));
  }
  return InfoFromHeader(h);
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const ModelConfig& model_config,
                 const TrainConfig& train_config, const PreparedData& data)
    : model_config_(model_config),
      config_(train_config),
      data_(data),
      model_(model_config, data, train_config.seed),
      adam_(model_.params(), train_config) {
  config_.Validate();
}

void Trainer::Resume(const std::string& checkpoint_path) {
  CheckpointInfo info = LoadCheckpoint(checkpoint_path, model_.params(), &adam_);
  epoch_ = info.epoch;
  best_metric_ = info.best_metric;
  best_epoch_ = info.best_epoch;
  bad_epochs_ = info.bad_epochs;
  resumed_history_ = info.history;
  best_values_.clear();
  const auto best_path =
      std::filesystem::path(checkpoint_path).parent_path() / "best.ckpt";
  if (best_epoch_ > 0 && std::filesystem::exists(best_path)) {
    Model scratch(model_config_, data_, config_.seed);
    LoadCheckpoint(best_path.string(), scratch.params(), nullptr);
    for (size_t i = 0; i < scratch.params().size(); ++i) {
      best_values_.push_back(scratch.params()[i].value);
    }
  }
}

LossValues Trainer::Step(const Batch& batch, Rng* dropout_rng) {
  ParameterStore& params = model_.params();
  params.ZeroGrad();
  Tape tape;
  LossGraph loss = model_.Loss(tape, data_, batch, dropout_rng);
  const LossValues values = loss.Values();
  tape.Backward(loss.total);
  adam_.Step(params);
  return values;
}

TrainResult Trainer::Run(const TrainHooks& hooks) {
  namespace fs = std::filesystem;
  TrainResult result;
  std::ofstream history_file;
  std::vector<std::string> lines = resumed_history_;
  if (!hooks.run_dir.empty()) {
    fs::create_directories(hooks.run_dir);
    history_file.open(fs::path(hooks.run_dir) / "history.jsonl",
                      std::ios::trunc);
    for (const auto& line : lines) history_file << line << '\n';
    history_file.flush();
  }
  const bool has_validation = !data_.ValidationUsers().empty();
  auto checkpoint_info = [&]() {
    CheckpointInfo info;
    info.config = hooks.config_echo;
    info.epoch = epoch_;
    info.best_metric = best_metric_;
    info.best_epoch = best_epoch_;
    info.bad_epochs = bad_epochs_;
    info.history = lines;
    return info;
  };
  auto snapshot = [&]() {
    best_values_.clear();
    for (size_t i = 0; i < model_.params().size(); ++i) {
      best_values_.push_back(model_.params()[i].value);
    }
  };

  while (epoch_ < config_.max_epochs && bad_epochs_ <= config_.patience) {
    const size_t e = epoch_ + 1;
    const auto start = std::chrono::steady_clock::now();
    EpochRecord record;
    record.epoch = e;
    try {
      const auto batches = MakeBatches(data_, config_, e);
      Rng dropout_rng(DeriveSeed(config_.seed, "dropout/" + std::to_string(e)));
      for (const Batch& batch : batches) {
        const LossValues v = Step(batch, &dropout_rng);
        record.loss.total += v.total;
        record.loss.bpr += v.bpr;
        record.loss.seq_cl += v.seq_cl;
        record.loss.graph_cl += v.graph_cl;
        record.loss.view_cl += v.view_cl;
        record.loss.dis_cl += v.dis_cl;
        record.loss.l2 += v.l2;
      }
      const double n = double(batches.size());
      for (double* x : {&record.loss.total, &record.loss.bpr, &record.loss.seq_cl,
                        &record.loss.graph_cl, &record.loss.view_cl,
                        &record.loss.dis_cl, &record.loss.l2}) {
        *x /= n;
      }
    } catch (const NumericError& err) {
      std::string where = "no checkpoint written";
      if (!hooks.run_dir.empty() && epoch_ > 0) {
        where = "last good checkpoint: " +
                (fs::path(hooks.run_dir) / "last.ckpt").string() + " (epoch " +
                std::to_string(epoch_) + ")";
      }
      throw NumericError(std::string("training diverged in epoch ") +
                         std::to_string(e) + ": " + err.what() + "; " + where);
    }
    if (has_validation) {
      record.valid =
          Evaluate(model_, data_, EvalSplit::kValidation, EvalSegment::kOverall)
              .metrics;
      record.improved = record.valid->ndcg10 > best_metric_;
    } else {
      record.improved = true;
    }
    if (record.improved) {
      best_metric_ = record.valid ? record.valid->ndcg10 : best_metric_;
      best_epoch_ = e;
      bad_epochs_ = 0;
      snapshot();
    } else {
      ++bad_epochs_;
    }
    record.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    epoch_ = e;
    lines.push_back(record.ToJson());
    result.history.push_back(record);
    if (!hooks.run_dir.empty()) {
      history_file << lines.back() << '\n';
      history_file.flush();
      if (record.improved) {
        SaveCheckpoint((fs::path(hooks.run_dir) / "best.ckpt").string(),
                       model_.params(), nullptr, checkpoint_info());
      }
      SaveCheckpoint((fs::path(hooks.run_dir) / "last.ckpt").string(),
                     model_.params(), &adam_, checkpoint_info());
    }
    if (hooks.on_epoch) hooks.on_epoch(record);
    if (hooks.should_stop && hooks.should_stop(record)) break;
  }
  result.stopped_early = bad_epochs_ > config_.patience;
  result.best_epoch = best_epoch_;
  result.best_valid_ndcg10 = best_metric_;
  if (!best_values_.empty()) {
    for (size_t i = 0; i < best_values_.size(); ++i) {
      model_.params()[i].value = best_values_[i];
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentResult RunExperiment(const ModelConfig& model_config,
                               const TrainConfig& train_config,
                               const PreparedData& data,
                               const TrainHooks& hooks) {
  Trainer trainer(model_config, train_config, data);
  ExperimentResult out;
  out.train = trainer.Run(hooks);
  out.test = Evaluate(trainer.model(), data, EvalSplit::kTest,
                      EvalSegment::kOverall)
                 .metrics;
  try {
    out.test_cold = Evaluate(trainer.model(), data, EvalSplit::kTest,
                             EvalSegment::kColdStart)
                        .metrics;
  } catch (const DataError&) {
    out.test_cold.reset();
  }
  return out;
}

std::vector<AblationSpec> AblationConfigurations() {
  const std::vector<std::string> labels = {
      "seq",           "graph",           "seq+graph",
      "seq+BCL",       "graph+BCL",       "seq+graph+BCL",
      "seq+graph+BCL+VCL", "seq+graph+BCL+VCL+DCL"};
  std::vector<AblationSpec> out;
  for (const auto& label : labels) {
    out.push_back({label, Components::Parse(label)});
  }
  return out;
}

}  // namespace mbcl
