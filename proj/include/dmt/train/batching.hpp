// Copyright 2026 The DMT Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dmt::train {

struct BatchComposition {
  std::size_t labeled_per_batch = 1;
  std::size_t unlabeled_per_batch = 7;

  BatchComposition() = default;
  BatchComposition(std::size_t labeled, std::size_t unlabeled);  // rejects 0 + 0
  std::size_t batch_size() const { return labeled_per_batch + unlabeled_per_batch; }
  // Splits batch_size by an "unlabeled:labeled" ratio such as 7:1.
  static BatchComposition from_ratio(std::size_t batch_size, std::size_t unlabeled_share,
                                     std::size_t labeled_share);
};

// Curriculum of selection fractions; strictly increasing and ending at 1.
struct IterationSchedule {
  std::vector<double> alphas{0.2, 0.4, 0.6, 0.8, 1.0};

  IterationSchedule() = default;
  explicit IterationSchedule(std::vector<double> a);
  std::size_t iterations() const { return alphas.size(); }
};

// Draws pool positions without replacement, reshuffling on each pass.
class PoolSampler {
 public:
  PoolSampler(std::size_t pool_size, std::uint64_t seed);
  std::size_t next();
  std::size_t pool_size() const { return order_.size(); }

 private:
  void reshuffle();
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

struct BatchItem {
  std::size_t position;  // index into the labeled or pseudo-labeled pool
  bool labeled;
};

// One mixed batch: the labeled items come first.
std::vector<BatchItem> compose_batch(PoolSampler* labeled, PoolSampler* unlabeled,
                                     const BatchComposition& composition);

// Steps per epoch: the larger pool is seen once, the smaller one cycles.
std::size_t steps_per_epoch(std::size_t labeled_pool, std::size_t unlabeled_pool,
                            const BatchComposition& composition);

}  // namespace dmt::train
