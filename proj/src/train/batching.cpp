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

#include "dmt/train/batching.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt::train {

BatchComposition::BatchComposition(std::size_t labeled, std::size_t unlabeled)
    : labeled_per_batch(labeled), unlabeled_per_batch(unlabeled) {
  if (labeled + unlabeled == 0) throw ConfigError("batch composition must be non-empty");
}

BatchComposition BatchComposition::from_ratio(std::size_t batch_size, std::size_t unlabeled_share,
                                              std::size_t labeled_share) {
  const std::size_t parts = unlabeled_share + labeled_share;
  if (parts == 0 || batch_size == 0) throw ConfigError("batch size and ratio must be positive");
  if (batch_size % parts != 0) {
    throw ConfigError(fmt::format("batch size {} is not divisible by ratio {}:{}", batch_size,
                                  unlabeled_share, labeled_share));
  }
  const std::size_t unit = batch_size / parts;
  return BatchComposition(unit * labeled_share, unit * unlabeled_share);
}

IterationSchedule::IterationSchedule(std::vector<double> a) : alphas(std::move(a)) {
  if (alphas.empty()) throw ConfigError("iteration schedule is empty");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] <= 1.0)) {
      throw ConfigError(fmt::format("schedule fraction {} outside (0, 1]", alphas[i]));
    }
    if (i > 0 && !(alphas[i] > alphas[i - 1])) {
      throw ConfigError("schedule fractions must be strictly increasing");
    }
  }
  if (alphas.back() != 1.0) throw ConfigError("schedule must end at 1.0");
}

PoolSampler::PoolSampler(std::size_t pool_size, std::uint64_t seed)
    : order_(pool_size), rng_(seed) {
  std::iota(order_.begin(), order_.end(), 0);
  reshuffle();
}

void PoolSampler::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::size_t PoolSampler::next() {
  if (order_.empty()) throw ConfigError("cannot sample from an empty pool");
  if (cursor_ == order_.size()) reshuffle();
  return order_[cursor_++];
}

std::vector<BatchItem> compose_batch(PoolSampler* labeled, PoolSampler* unlabeled,
                                     const BatchComposition& composition) {
  if (composition.labeled_per_batch > 0 && (!labeled || labeled->pool_size() == 0)) {
    throw ConfigError("labeled pool is empty but the batch needs labeled samples");
  }
  if (composition.unlabeled_per_batch > 0 && (!unlabeled || unlabeled->pool_size() == 0)) {
    throw ConfigError("pseudo-labeled pool is empty but the batch needs unlabeled samples");
  }
  std::vector<BatchItem> batch;
  batch.reserve(composition.batch_size());
  for (std::size_t i = 0; i < composition.labeled_per_batch; ++i) batch.push_back({labeled->next(), true});
  for (std::size_t i = 0; i < composition.unlabeled_per_batch; ++i) {
    batch.push_back({unlabeled->next(), false});
  }
  return batch;
}

std::size_t steps_per_epoch(std::size_t labeled_pool, std::size_t unlabeled_pool,
                            const BatchComposition& composition) {
  auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
  std::size_t steps = 0;
  if (composition.labeled_per_batch > 0) {
    steps = std::max(steps, ceil_div(labeled_pool, composition.labeled_per_batch));
  }
  if (composition.unlabeled_per_batch > 0) {
    steps = std::max(steps, ceil_div(unlabeled_pool, composition.unlabeled_per_batch));
  }
  return std::max<std::size_t>(steps, 1);
}

}  // namespace dmt::train
