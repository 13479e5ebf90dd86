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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dmt/init/model_init.hpp"
#include "dmt/train/config.hpp"
#include "dmt/train/dataset.hpp"
#include "dmt/train/loop.hpp"

namespace dmt::train {

enum class AblationVariant { DMT, OnlineST, CBST, DST, DMTNaive, DMTFlip, CL };

AblationVariant parse_variant(const std::string& name);
const char* to_string(AblationVariant v);

// Config adjustments that turn the base config into the variant.
ExperimentConfig apply_variant(ExperimentConfig config, AblationVariant variant);

struct IterationMetrics {
  std::size_t iteration = 0;
  double alpha = 0.0;
  std::string model;  // "F", "A" or "B"
  double test_accuracy = 0.0;
  double test_fine_grained = 0.0;
  double valtiny_accuracy = 0.0;
  double test_miou = 0.0;
  double valtiny_miou = 0.0;
  std::size_t pseudo_labeled = 0;  // selected samples or pixels
  double pseudo_error = 0.0;       // against held-back ground truth
  double mean_weight = 0.0;
  std::size_t agreement = 0;
  std::size_t negative_disagreement = 0;
  std::size_t positive_disagreement = 0;
  std::string checkpoint;
  std::string checkpoint_sha256;
};

struct RunSummary {
  std::string variant;
  std::string config_hash;
  std::vector<IterationMetrics> iterations;
  IterationMetrics final;
  // Per-batch traces keyed by "<iteration>/<model>", filled when config.trace is set.
  std::vector<std::pair<std::string, std::vector<BatchTrace>>> traces;
};

struct RunContext {
  ExperimentConfig config;
  const DataBundle* data = nullptr;
  init::SplitSpec split;
  std::filesystem::path out;  // empty keeps everything in memory
};

// Supervised training on the labeled subset for baseline_epochs(ratio, oracle_epochs).
RunSummary run_baseline(const RunContext& ctx);
// Iterative re-training with a growing top fraction of pseudo labels.
RunSummary run_dmt_classification(const RunContext& ctx, const std::string& variant = "dmt");
// Two models labeling each other (or themselves) with per-class selection.
RunSummary run_dmt_segmentation(const RunContext& ctx, const std::string& variant = "dmt");
// Per-step thresholded pseudo labels from the live model, starting from the
// supervised initial model.
RunSummary run_online_st(const RunContext& ctx);
RunSummary run_ablation(AblationVariant variant, const RunContext& ctx);

// Split for the configured dataset: stratified by label for classification,
// a single stratum for segmentation.
init::SplitSpec make_run_split(const ExperimentConfig& config, const Dataset& train);

// Applies the unlabeled_limit to the split's unlabeled ids.
std::vector<std::size_t> unlabeled_pool(const RunContext& ctx);

}  // namespace dmt::train
