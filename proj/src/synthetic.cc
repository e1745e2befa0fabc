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

#include "mbcl/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mbcl/errors.h"
#include "mbcl/random.h"

namespace mbcl {
namespace {

void Validate(const GenConfig& c) {
  c.schema.Validate();
  if (c.n_users == 0 || c.n_items == 0 || c.latent_dim == 0) {
    throw ConfigError("n_users, n_items and latent_dim must be positive");
  }
  const size_t b = c.schema.size();
  if (c.thresholds.empty()) {
    if (c.per_user.size() != b) {
      throw ConfigError("per-user targets needed for each of the " +
                        std::to_string(b) + " behaviors");
    }
    for (size_t i = 0; i < b; ++i) {
      if (!(c.per_user[i] > 0) || c.per_user[i] > double(c.n_items)) {
        throw ConfigError("per-user targets must lie in (0, n_items]");
      }
      if (i > 0 && !(c.per_user[i] < c.per_user[i - 1])) {
        throw ConfigError("per-user targets must decrease toward the target");
      }
    }
  } else {
    if (c.thresholds.size() != b) {
      throw ConfigError("one threshold needed per behavior");
    }
    for (size_t i = 1; i < b; ++i) {
      if (!(c.thresholds[i] > c.thresholds[i - 1])) {
        throw ConfigError("thresholds must increase toward the target");
      }
    }
  }
  if (c.clusters > 0 && !(c.cluster_spread > 0)) {
    throw ConfigError("cluster_spread must be positive");
  }
  if (c.noise < 0 || c.popularity < 0 || c.activity < 0) {
    throw ConfigError("noise, popularity and activity must be non-negative");
  }
  if (c.max_attempts == 0) throw ConfigError("max_attempts must be positive");
}

void Normalize(std::vector<double>& row) {
  double norm = 0;
  for (double x : row) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : row) x /= norm;
}

std::vector<std::vector<double>> UnitRows(size_t n, size_t k, Rng& rng) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(k));
  for (auto& row : rows) {
    for (double& x : row) x = rng.Normal();
    Normalize(row);
  }
  return rows;
}

// Unit vectors scattered around randomly chosen cluster centres.
std::vector<std::vector<double>> ClusteredRows(
    size_t n, size_t k, const std::vector<std::vector<double>>& centres,
    double spread, Rng& rng) {
  if (centres.empty()) return UnitRows(n, k, rng);
  std::vector<std::vector<double>> rows(n, std::vector<double>(k));
  const double scale = spread / std::sqrt(double(k));
  for (auto& row : rows) {
    const auto& centre = centres[rng.UniformInt(centres.size())];
    for (size_t j = 0; j < k; ++j) row[j] = centre[j] + scale * rng.Normal();
    Normalize(row);
  }
  return rows;
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct Attempt {
  GeneratedData data;
  double zero_target_fraction = 0;
};

Attempt GenerateOnce(const GenConfig& c, uint64_t seed) {
  Rng rng(seed);
  const size_t nb = c.schema.size();
  const auto centres = UnitRows(c.clusters, c.latent_dim, rng);
  auto users = ClusteredRows(c.n_users, c.latent_dim, centres,
                             c.cluster_spread, rng);
  auto items = ClusteredRows(c.n_items, c.latent_dim, centres,
                             c.cluster_spread, rng);
  std::vector<double> popularity(c.n_items);
  for (double& p : popularity) p = c.popularity * rng.Normal();
  std::vector<double> affinity(c.n_users * c.n_items);
  for (size_t u = 0; u < c.n_users; ++u) {
    const double offset = c.activity * rng.Normal();
    for (size_t v = 0; v < c.n_items; ++v) {
      affinity[u * c.n_items + v] = Dot(users[u], items[v]) + popularity[v] +
                                    offset + c.noise * rng.Normal();
    }
  }

  std::vector<double> tau = c.thresholds;
  if (tau.empty()) {
    std::vector<double> sorted = affinity;
    for (size_t b = 0; b < nb; ++b) {
      const double keep = c.per_user[b] / double(c.n_items);
      size_t k = size_t(std::floor((1.0 - keep) * double(sorted.size())));
      k = std::min(k, sorted.size() - 1);
      std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
      tau.push_back(sorted[k]);
    }
    for (size_t b = 1; b < nb; ++b) {
      if (!(tau[b] > tau[b - 1])) {
        throw ConfigError("calibrated thresholds are not increasing");
      }
    }
  }

  Attempt out;
  InteractionLog& log = out.data.log;
  log.schema = c.schema;
  std::vector<int64_t> item_index(c.n_items, -1);
  std::vector<uint32_t> item_source;
  size_t zero_target = 0;
  std::vector<uint32_t> order(c.n_items);
  for (size_t u = 0; u < c.n_users; ++u) {
    const double* row = &affinity[u * c.n_items];
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) { return row[a] > row[b]; });
    size_t accepted = 0;
    while (accepted < order.size() && row[order[accepted]] > tau[0]) ++accepted;
    if (c.max_per_user > 0) accepted = std::min(accepted, c.max_per_user);

    const int64_t base = 1600000000 + int64_t(rng.UniformInt(10000000));
    std::vector<Interaction> records;
    bool has_target = false;
    for (size_t r = 0; r < accepted; ++r) {
      const uint32_t v = order[r];
      int64_t t = base + int64_t(rng.UniformInt(1000000));
      for (size_t b = 0; b < nb && row[v] > tau[b]; ++b) {
        if (b > 0) t += 1 + int64_t(rng.UniformInt(3600));
        records.push_back({0, v, uint32_t(b), t});
        if (b + 1 == nb) has_target = true;
      }
    }
    if (!has_target) ++zero_target;
    if (records.empty()) continue;
    std::stable_sort(records.begin(), records.end(),
                     [](const Interaction& a, const Interaction& b) {
                       return a.timestamp < b.timestamp;
                     });
    const uint32_t user = uint32_t(log.user_labels.size());
    log.user_labels.push_back("u" + std::to_string(u));
    out.data.user_latent.push_back(users[u]);
    for (Interaction& rec : records) {
      if (item_index[rec.item] < 0) {
        item_index[rec.item] = int64_t(log.item_labels.size());
        log.item_labels.push_back("i" + std::to_string(rec.item));
        item_source.push_back(rec.item);
      }
      rec.user = user;
      rec.item = uint32_t(item_index[rec.item]);
      log.records.push_back(rec);
    }
  }
  for (uint32_t v : item_source) {
    out.data.item_latent.push_back(items[v]);
    out.data.item_popularity.push_back(popularity[v]);
  }
  out.data.thresholds = tau;
  out.data.seed_used = seed;
  out.zero_target_fraction = double(zero_target) / double(c.n_users);
  return out;
}

}  // namespace

double GeneratedData::OracleScore(uint32_t user, uint32_t item) const {
  return Dot(user_latent.at(user), item_latent.at(item)) +
         item_popularity.at(item);
}

GeneratedData Generate(const GenConfig& config, const WarningSink& warn) {
  Validate(config);
  double last_fraction = 0;
  for (size_t attempt = 0; attempt < config.max_attempts; ++attempt) {
    const uint64_t seed =
        attempt == 0 ? config.seed
                     : DeriveSeed(config.seed,
                                  "regenerate-" + std::to_string(attempt));
    Attempt a = GenerateOnce(config, seed);
    if (a.data.log.records.empty()) {
      last_fraction = 1.0;
    } else if (a.zero_target_fraction <= config.max_zero_target_fraction) {
      a.data.attempts = attempt + 1;
      return std::move(a.data);
    } else {
      last_fraction = a.zero_target_fraction;
    }
    if (warn) {
      warn("generated data left " + std::to_string(last_fraction * 100) +
           "% of users without a target record; regenerating");
    }
  }
  throw DataError("synthetic generation failed after " +
                  std::to_string(config.max_attempts) +
                  " attempts: users without target records exceed " +
                  std::to_string(config.max_zero_target_fraction * 100) + "%");
}

}  // namespace mbcl
