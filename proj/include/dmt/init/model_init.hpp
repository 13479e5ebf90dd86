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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dmt/core/probability.hpp"
#include "dmt/core/rational.hpp"
#include "dmt/nn/backbone.hpp"

namespace dmt::init {

using SampleId = std::size_t;

struct SubsetPair {
  std::vector<SampleId> a;
  std::vector<SampleId> b;
};

// Shuffles ids with seed, then A = first k and B = last k, so the overlap is
// max(0, 2k - n), the smallest possible for two k-subsets.
SubsetPair difference_maximized_sampling(std::span<const SampleId> ids, std::size_t k,
                                         std::uint64_t seed);

// Deterministic partition of a dataset into labeled, unlabeled and valtiny.
struct SplitSpec {
  std::vector<SampleId> labeled_ids;
  std::vector<SampleId> unlabeled_ids;
  std::vector<SampleId> valtiny_ids;
  std::uint64_t seed = 0;
  Rational labeled_ratio;

  // Throws ValidationError if the lists overlap.
  void validate() const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

inline constexpr std::size_t kClassificationValtinySize = 200;

// Class-stratified draw: valtiny first, then floor(ratio * n) labeled samples
// from the remainder; everything else is unlabeled. Quotas follow class
// frequencies with largest-remainder rounding.
SplitSpec make_split(std::span<const ClassIndex> labels, std::size_t num_classes,
                     Rational labeled_ratio, std::size_t valtiny_size, std::uint64_t seed);

std::string split_to_json(const SplitSpec& split);
SplitSpec split_from_json(const std::string& text);
void save_split(const SplitSpec& split, const std::filesystem::path& path);
SplitSpec load_split(const std::filesystem::path& path);

// Hands out previously unused seeds: a monotone counter over the experiment seed.
class SeedCounter {
 public:
  explicit SeedCounter(std::uint64_t experiment_seed, std::uint64_t next_index = 0)
      : base_(experiment_seed), next_(next_index) {}
  std::uint64_t next() { return seed_at(next_++); }
  std::uint64_t seed_at(std::uint64_t index) const;
  std::uint64_t next_index() const { return next_; }

 private:
  std::uint64_t base_;
  std::uint64_t next_;
};

struct InitPolicy {
  enum class Kind { DistinctRandomSeeds, DistinctPretrainedWeights, DifferenceMaximizedSubsets };
  Kind kind = Kind::DistinctRandomSeeds;
  std::pair<std::uint64_t, std::uint64_t> seeds{1, 2};
  // Checkpoint names for DistinctPretrainedWeights; for
  // DifferenceMaximizedSubsets the first one, if set, is the shared start.
  std::pair<std::string, std::string> checkpoints;
  std::optional<std::size_t> subset_size;  // default ceil(n / 2)
  std::uint64_t sampling_seed = 0;

  void validate() const;
};

const char* to_string(InitPolicy::Kind k);
InitPolicy::Kind parse_init_kind(const std::string& name);

// Named warm-start checkpoints available to DistinctPretrainedWeights.
using CheckpointRegistry = std::map<std::string, std::filesystem::path>;

struct ModelPair {
  std::unique_ptr<nn::Backbone> a;
  std::unique_ptr<nn::Backbone> b;
  std::vector<SampleId> subset_a;
  std::vector<SampleId> subset_b;
};

ModelPair init_model_pair(const InitPolicy& policy, std::span<const SampleId> labeled_ids,
                          const std::string& arch, const CheckpointRegistry& registry = {});

// Largest absolute probability difference and number of argmax
// disagreements between two models over a probe batch.
struct Disagreement {
  double max_abs_difference = 0.0;
  std::size_t argmax_disagreements = 0;
};
Disagreement measure_disagreement(const nn::Backbone& a, const nn::Backbone& b,
                                  const nn::Tensor& probe);

}  // namespace dmt::init
