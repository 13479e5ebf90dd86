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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmt/core/gamma_schedule.hpp"
#include "dmt/core/loss.hpp"
#include "dmt/metrics/metrics.hpp"
#include "dmt/nn/backbone.hpp"
#include "dmt/nn/optimizer.hpp"
#include "dmt/pseudo/selection.hpp"
#include "dmt/pseudo/types.hpp"
#include "dmt/train/augment.hpp"
#include "dmt/train/batching.hpp"
#include "dmt/train/dataset.hpp"
#include "dmt/train/weighting.hpp"

namespace dmt::train {

// Offline pseudo labels, position-aligned with ids (dataset indices).
struct PseudoPool {
  std::vector<std::size_t> ids;
  std::vector<ClassIndex> labels;            // classification
  std::vector<float> confidences;            // classification
  std::vector<PseudoLabelMap> maps;          // segmentation
  std::size_t size() const { return ids.size(); }
};

// Sample ids of records and maps are decimal dataset indices.
PseudoPool pool_from_records(std::span<const PseudoLabelRecord> records);
PseudoPool pool_from_maps(std::span<const PseudoLabelMap> maps);

struct TrainSpec {
  std::size_t epochs = 1;
  double learning_rate = 0.1;
  nn::LrSchedule lr_schedule = nn::LrSchedule::Cosine;
  nn::SgdOptions sgd;
  BatchComposition composition;
  Augmentation augmentation = Augmentation::None;
  float jitter_std = kJitterStd;
  bool mixup = false;
  double mixup_alpha = 1.0;
  WeightRule rule = WeightRule::Dynamic;
  GammaPair gammas;
  // When true, both gammas are scaled by the ramp exp(sign * 5 * (1 - t/T)^2).
  bool gamma_schedule = false;
  ScheduleSign gamma_sign = ScheduleSign::Positive;
  // When set, unlabeled targets come from the live model at this threshold.
  std::optional<double> online_threshold;
  double ema_decay = 0.0;
  // Wall-clock cap checked at epoch boundaries; 0 disables it.
  double time_budget_seconds = 0.0;
  std::uint64_t seed = 0;
};

// Per-batch record. Loss terms are evaluated on the unmixed forward pass;
// unit_unlabeled_loss is the same batch with every weight set to 1 and
// case3_loss the unit-weight share of positive-disagreement positions.
struct BatchTrace {
  std::size_t step = 0;
  std::string batch_digest;
  std::size_t normalizer = 0;
  double labeled_loss = 0.0;
  double unlabeled_loss = 0.0;
  double unit_unlabeled_loss = 0.0;
  double case3_loss = 0.0;
  std::size_t agreement = 0;
  std::size_t negative_disagreement = 0;
  std::size_t positive_disagreement = 0;
};

struct TrainStats {
  std::size_t steps = 0;
  double last_loss = 0.0;
  double mean_unlabeled_weight = 0.0;
  std::size_t agreement = 0;
  std::size_t negative_disagreement = 0;
  std::size_t positive_disagreement = 0;
  bool budget_exhausted = false;
};

// Trains model in place. Labeled ids index data; pseudo (offline) or
// online_ids (with spec.online_threshold) supply the unlabeled share.
// With ema_decay > 0 the model ends holding the averaged parameters.
TrainStats train_model(nn::Backbone& model, const Dataset& data,
                       std::span<const std::size_t> labeled_ids, const PseudoPool* pseudo,
                       std::span<const std::size_t> online_ids, const TrainSpec& spec,
                       std::vector<BatchTrace>* trace = nullptr);

// Probabilities for ids, evaluated in chunks of batch samples.
nn::Tensor predict(const nn::Backbone& model, const Dataset& data,
                   std::span<const std::size_t> ids, std::size_t batch);

std::vector<pseudo::KeyedPrediction> keyed_predictions(const nn::Backbone& model,
                                                       const Dataset& data,
                                                       std::span<const std::size_t> ids,
                                                       std::size_t batch);
std::vector<pseudo::KeyedProbabilityMap> keyed_maps(const nn::Backbone& model, const Dataset& data,
                                                    std::span<const std::size_t> ids,
                                                    std::size_t batch);

struct ClassificationScore {
  double accuracy = 0.0;
  double fine_grained = 0.0;
};
ClassificationScore evaluate_classification(const nn::Backbone& model, const Dataset& data,
                                            std::span<const std::size_t> ids, std::size_t batch);

struct SegmentationScore {
  double mean_iou = 0.0;
  double pixel_accuracy = 0.0;
};
SegmentationScore evaluate_segmentation(const nn::Backbone& model, const Dataset& data,
                                        std::span<const std::size_t> ids, std::size_t batch);

std::vector<std::size_t> all_ids(const Dataset& data);

}  // namespace dmt::train
