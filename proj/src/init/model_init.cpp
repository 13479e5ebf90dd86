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

#include "dmt/init/model_init.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include "json.hpp"
#include <spdlog/spdlog.h>

#include "dmt/core/error.hpp"
#include "dmt/core/random.hpp"

namespace dmt::init {

namespace {

constexpr std::uint64_t kStreamValtiny = 11;
constexpr std::uint64_t kStreamLabeled = 12;
constexpr std::uint64_t kStreamSeedCounter = 13;
constexpr std::uint64_t kStreamProbe = 14;
constexpr std::size_t kProbeBatch = 16;

// Largest-remainder apportionment of total across classes by weight.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> quota(weights.size(), 0);
  if (sum == 0 || total == 0) return quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(weights[c]) /
                         static_cast<double>(sum);
    quota[c] = std::min(weights[c], static_cast<std::size_t>(std::floor(exact + 1e-9)));
    assigned += quota[c];
    remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  // Hand out what is left, skipping classes with nothing more to give.
  while (assigned < total) {
    bool progressed = false;
    for (const auto& [rem, c] : remainders) {
      if (assigned == total) break;
      if (quota[c] < weights[c]) {
        ++quota[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return quota;
}

// Draws quota[c] ids per class from pools (shuffled in place), removing them.
std::vector<SampleId> draw_stratified(std::vector<std::vector<SampleId>>& pools, std::size_t total,
                                      std::mt19937_64& rng) {
  std::vector<std::size_t> sizes;
  for (const auto& p : pools) sizes.push_back(p.size());
  const auto quota = apportion(total, sizes);
  std::vector<SampleId> out;
  for (std::size_t c = 0; c < pools.size(); ++c) {
    std::shuffle(pools[c].begin(), pools[c].end(), rng);
    out.insert(out.end(), pools[c].end() - static_cast<std::ptrdiff_t>(quota[c]), pools[c].end());
    pools[c].resize(pools[c].size() - quota[c]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SubsetPair difference_maximized_sampling(std::span<const SampleId> ids, std::size_t k,
                                         std::uint64_t seed) {
  if (k > ids.size()) {
    throw ValidationError(fmt::format("subset size {} exceeds {} labeled samples", k, ids.size()));
  }
  std::vector<SampleId> shuffled(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  SubsetPair pair;
  pair.a.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(k));
  pair.b.assign(shuffled.end() - static_cast<std::ptrdiff_t>(k), shuffled.end());
  return pair;
}

void SplitSpec::validate() const {
  std::set<SampleId> seen;
  for (const auto* list : {&labeled_ids, &unlabeled_ids, &valtiny_ids}) {
    for (auto id : *list) {
      if (!seen.insert(id).second) {
        throw ValidationError(fmt::format("sample {} appears in more than one split", id));
      }
    }
  }
}

SplitSpec make_split(std::span<const ClassIndex> labels, std::size_t num_classes,
                     Rational labeled_ratio, std::size_t valtiny_size, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (labeled_ratio.value() > 1.0) {
    throw ValidationError(fmt::format("labeled ratio {} exceeds 1", labeled_ratio.to_string()));
  }
  const auto labeled_count =
      static_cast<std::size_t>(std::floor(labeled_ratio.value() * static_cast<double>(n) + 1e-9));
  if (labeled_count + valtiny_size > n) {
    throw ValidationError(fmt::format("{} labeled + {} valtiny samples exceed dataset size {}",
                                      labeled_count, valtiny_size, n));
  }
  std::vector<std::vector<SampleId>> pools(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw IndexError(fmt::format("sample {} has label {} outside [0, {})", i, labels[i],
                                   num_classes));
    }
    pools[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  SplitSpec split;
  split.seed = seed;
  split.labeled_ratio = labeled_ratio;
  auto valtiny_rng = make_rng(seed, {kStreamValtiny});
  split.valtiny_ids = draw_stratified(pools, valtiny_size, valtiny_rng);
  auto labeled_rng = make_rng(seed, {kStreamLabeled});
  split.labeled_ids = draw_stratified(pools, labeled_count, labeled_rng);
  for (const auto& p : pools) split.unlabeled_ids.insert(split.unlabeled_ids.end(), p.begin(), p.end());
  std::sort(split.unlabeled_ids.begin(), split.unlabeled_ids.end());

  std::set<ClassIndex> covered;
  for (auto id : split.labeled_ids) covered.insert(labels[id]);
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const bool exists = std::any_of(labels.begin(), labels.end(),
                                    [&](ClassIndex l) { return static_cast<std::size_t>(l) == c; });
    present += exists ? 1 : 0;
  }
  if (labeled_count > 0 && covered.size() < present) {
    spdlog::warn("labeled split covers {} of {} classes", covered.size(), present);
  }
  return split;
}

std::string split_to_json(const SplitSpec& split) {
  nlohmann::json j;
  j["seed"] = split.seed;
  j["labeled_ratio"] = split.labeled_ratio.to_string();
  j["labeled_ids"] = split.labeled_ids;
  j["unlabeled_ids"] = split.unlabeled_ids;
  j["valtiny_ids"] = split.valtiny_ids;
  return j.dump();
}

SplitSpec split_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SplitSpec split;
    split.seed = j.at("seed").get<std::uint64_t>();
    split.labeled_ratio = Rational::parse(j.at("labeled_ratio").get<std::string>());
    split.labeled_ids = j.at("labeled_ids").get<std::vector<SampleId>>();
    split.unlabeled_ids = j.at("unlabeled_ids").get<std::vector<SampleId>>();
    split.valtiny_ids = j.at("valtiny_ids").get<std::vector<SampleId>>();
    split.validate();
    return split;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("malformed split: {}", e.what()));
  }
}

void save_split(const SplitSpec& split, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << split_to_json(split) << '\n';
}

SplitSpec load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return split_from_json(text);
}

std::uint64_t SeedCounter::seed_at(std::uint64_t index) const {
  return derive_seed(base_, {kStreamSeedCounter, index});
}

const char* to_string(InitPolicy::Kind k) {
  switch (k) {
    case InitPolicy::Kind::DistinctRandomSeeds: return "distinct-seeds";
    case InitPolicy::Kind::DistinctPretrainedWeights: return "distinct-pretrained";
    case InitPolicy::Kind::DifferenceMaximizedSubsets: return "difference-maximized";
  }
  return "unknown";
}

InitPolicy::Kind parse_init_kind(const std::string& name) {
  for (auto k : {InitPolicy::Kind::DistinctRandomSeeds, InitPolicy::Kind::DistinctPretrainedWeights,
                 InitPolicy::Kind::DifferenceMaximizedSubsets}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError(fmt::format("unknown init policy '{}'", name));
}

void InitPolicy::validate() const {
  switch (kind) {
    case Kind::DistinctRandomSeeds:
      if (seeds.first == seeds.second) {
        throw ValidationError(fmt::format("both models share seed {}", seeds.first));
      }
      break;
    case Kind::DistinctPretrainedWeights:
      if (checkpoints.first.empty() || checkpoints.second.empty()) {
        throw ValidationError("two checkpoint names are required");
      }
      if (checkpoints.first == checkpoints.second) {
        throw ValidationError(fmt::format("both models share checkpoint '{}'", checkpoints.first));
      }
      break;
    case Kind::DifferenceMaximizedSubsets:
      if (subset_size && *subset_size == 0) throw ValidationError("subset size must be positive");
      break;
  }
}

namespace {

std::unique_ptr<nn::Backbone> load_named(const CheckpointRegistry& registry,
                                         const std::string& name, const std::string& arch) {
  const auto it = registry.find(name);
  if (it == registry.end()) throw ConfigError(fmt::format("unknown checkpoint '{}'", name));
  auto model = nn::from_checkpoint(nn::load_checkpoint(it->second));
  if (model->arch() != nn::ArchSpec::parse(arch)) {
    throw ValidationError(fmt::format("checkpoint '{}' has architecture {}, expected {}", name,
                                      model->arch().to_string(), arch));
  }
  return model;
}

}  // namespace

ModelPair init_model_pair(const InitPolicy& policy, std::span<const SampleId> labeled_ids,
                          const std::string& arch, const CheckpointRegistry& registry) {
  policy.validate();
  ModelPair pair;
  switch (policy.kind) {
    case InitPolicy::Kind::DistinctRandomSeeds: {
      pair.a = nn::make_backbone(arch, policy.seeds.first);
      pair.b = nn::make_backbone(arch, policy.seeds.second);
      nn::Shape shape{kProbeBatch};
      for (auto d : pair.a->arch().input) shape.push_back(d);
      nn::Tensor probe(shape);
      auto rng = make_rng(policy.seeds.first ^ policy.seeds.second, {kStreamProbe});
      std::normal_distribution<float> normal(0.0f, 1.0f);
      for (auto& v : probe.values()) v = normal(rng);
      if (measure_disagreement(*pair.a, *pair.b, probe).max_abs_difference == 0.0) {
        throw ValidationError("models initialized from distinct seeds produce identical outputs");
      }
      pair.subset_a.assign(labeled_ids.begin(), labeled_ids.end());
      pair.subset_b = pair.subset_a;
      break;
    }
    case InitPolicy::Kind::DistinctPretrainedWeights:
      pair.a = load_named(registry, policy.checkpoints.first, arch);
      pair.b = load_named(registry, policy.checkpoints.second, arch);
      pair.subset_a.assign(labeled_ids.begin(), labeled_ids.end());
      pair.subset_b = pair.subset_a;
      break;
    case InitPolicy::Kind::DifferenceMaximizedSubsets: {
      pair.a = policy.checkpoints.first.empty()
                   ? nn::make_backbone(arch, policy.seeds.first)
                   : load_named(registry, policy.checkpoints.first, arch);
      pair.b = pair.a->clone();
      const std::size_t k = policy.subset_size.value_or((labeled_ids.size() + 1) / 2);
      auto subsets = difference_maximized_sampling(labeled_ids, k, policy.sampling_seed);
      pair.subset_a = std::move(subsets.a);
      pair.subset_b = std::move(subsets.b);
      break;
    }
  }
  return pair;
}

Disagreement measure_disagreement(const nn::Backbone& a, const nn::Backbone& b,
                                  const nn::Tensor& probe) {
  const auto pa = a.predict_proba(probe);
  const auto pb = b.predict_proba(probe);
  if (pa.shape() != pb.shape()) throw ValidationError("models have different output shapes");
  Disagreement d;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    d.max_abs_difference =
        std::max(d.max_abs_difference, std::abs(static_cast<double>(pa[i]) - pb[i]));
  }
  // Argmax per (sample, pixel) over dimension 1.
  const std::size_t n = pa.dim(0);
  const std::size_t c = pa.dim(1);
  const std::size_t inner = pa.size() / (n * c);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < inner; ++p) {
      std::size_t ia = 0, ib = 0;
      for (std::size_t k = 1; k < c; ++k) {
        if (pa[(s * c + k) * inner + p] > pa[(s * c + ia) * inner + p]) ia = k;
        if (pb[(s * c + k) * inner + p] > pb[(s * c + ib) * inner + p]) ib = k;
      }
      d.argmax_disagreements += ia != ib ? 1 : 0;
    }
  }
  return d;
}

}  // namespace dmt::init
