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

#ifndef MBCL_TESTS_COMMON_FIXTURES_H_
#define MBCL_TESTS_COMMON_FIXTURES_H_

#include "mbcl/data.h"
#include "mbcl/model.h"
#include "mbcl/synthetic.h"
#include "mbcl/training.h"

namespace mbcl::testing {

inline PreparedData SmallData(uint64_t seed, size_t users = 60,
                              size_t items = 40,
                              std::vector<double> per_user = {10, 5, 3},
                              size_t num_negatives = 20) {
  GenConfig gc;
  gc.seed = seed;
  gc.n_users = users;
  gc.n_items = items;
  gc.per_user = std::move(per_user);
  gc.max_per_user = 0;
  gc.clusters = 4;
  auto generated = Generate(gc);
  return BuildSplits(generated.log, 10, seed, num_negatives);
}

// Eight users, twelve items, three behaviors, d = 8, one transformer layer
// with two heads and one propagation layer.
struct ToyInstance {
  PreparedData data = SmallData(7, 8, 12, {6, 4, 2}, 4);
  ModelConfig config = [] {
    ModelConfig c;
    c.dim = 8;
    c.seq_layers = 1;
    c.heads = 2;
    c.graph_layers = 1;
    c.max_seq_len = 10;
    c.l2 = 1e-2;
    return c;
  }();
  TrainConfig train = [] {
    TrainConfig t;
    t.batch_size = 256;
    t.seed = 7;
    return t;
  }();
};

}  // namespace mbcl::testing

#endif  // MBCL_TESTS_COMMON_FIXTURES_H_
