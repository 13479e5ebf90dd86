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
#include <string>
#include <utility>
#include <vector>

#include "dmt/core/gamma_schedule.hpp"
#include "dmt/core/rational.hpp"
#include "dmt/init/model_init.hpp"
#include "dmt/nn/optimizer.hpp"
#include "dmt/train/augment.hpp"
#include "dmt/train/batching.hpp"
#include "dmt/train/dataset.hpp"
#include "dmt/train/weighting.hpp"

namespace dmt::train {

enum class TrainingMode { FineTune, ReTrain };
enum class Pairing { Cross, Self };
enum class SelectionKind { TopFraction, ClassBalanced, Cbst };

const char* to_string(TrainingMode m);
const char* to_string(Pairing p);
const char* to_string(SelectionKind s);

// Every knob of one experiment. Serialized as flat "key = value" lines.
struct ExperimentConfig {
  // data
  std::string dataset;  // moons | toy-seg | cifar10 | voc | cityscapes
  std::size_t dataset_size = 1000;
  std::size_t test_size = 1000;
  double moons_noise = 0.1;
  std::size_t grid_size = 64;
  std::size_t num_classes = 3;
  std::size_t shapes_per_image = 2;
  Rational labeled_ratio{1, 50};
  std::size_t valtiny_size = 200;
  std::size_t unlabeled_limit = 0;  // 0 keeps the whole pool
  std::string arch = "in=2:d32-d32-o2";

  // loss
  double gamma1 = 4.0;
  double gamma2 = 4.0;
  bool gamma_schedule = false;
  ScheduleSign gamma_schedule_sign = ScheduleSign::Positive;

  // optimization
  double learning_rate = 0.1;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  nn::LrSchedule lr_schedule = nn::LrSchedule::Cosine;
  TrainingMode training_mode = TrainingMode::ReTrain;
  std::size_t epochs_per_iteration = 10;
  std::size_t initial_epochs = 50;
  std::size_t oracle_epochs = 10;
  std::size_t batch_size = 8;
  std::pair<std::size_t, std::size_t> batch_ratio{7, 1};  // unlabeled : labeled
  Augmentation augmentation = Augmentation::None;
  double jitter_std = 0.05;
  bool mixup = false;
  double mixup_alpha = 1.0;
  double ema_decay = 0.0;  // 0 disables the averaged model
  double time_budget_seconds = 0.0;  // per training phase, 0 is unlimited

  // procedure
  std::vector<double> alphas{0.2, 0.4, 0.6, 0.8, 1.0};
  SelectionKind selection = SelectionKind::TopFraction;
  WeightRule weight_rule = WeightRule::Dynamic;
  init::InitPolicy::Kind init_policy = init::InitPolicy::Kind::DistinctRandomSeeds;
  std::uint64_t init_seed_a = 1;
  std::uint64_t init_seed_b = 2;
  std::size_t subset_size = 0;  // 0 means ceil(n / 2)
  std::string checkpoint_a;
  std::string checkpoint_b;
  Pairing pairing = Pairing::Cross;
  std::size_t models = 2;  // segmentation: 1 trains model A alone
  bool concurrent = false;
  double online_threshold = 0.9;
  std::size_t online_epochs = 20;
  std::size_t eval_batch = 256;
  std::uint64_t seed = 1;
  bool trace = false;

  Task task() const;
  BatchComposition composition() const;
  IterationSchedule schedule() const { return IterationSchedule(alphas); }
  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Sets one key from its text form; unknown keys and malformed values throw ConfigError.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
// Parses "key = value" lines ('#' starts a comment) on top of base.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
// Canonical text: every key in a fixed order.
std::string serialize_config(const ExperimentConfig& config);
// SHA-256 of the canonical text.
std::string config_hash(const ExperimentConfig& config);

}  // namespace dmt::train
