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

#include <span>
#include <string>
#include <vector>

#include "dmt/core/probability.hpp"
#include "dmt/pseudo/types.hpp"

namespace dmt::pseudo {

// A frozen model's prediction for one sample.
struct KeyedPrediction {
  std::string sample_id;
  ProbabilityVector probs;
};

// A frozen model's per-pixel prediction for one image.
struct KeyedProbabilityMap {
  std::string sample_id;
  ProbabilityMap map;
};

// Provenance stamped onto every emitted record or map.
struct LabelSource {
  std::string source_model = "unknown";
  int iteration = 1;
};

struct SelectionPolicy {
  enum class Kind { FixedThreshold, TopFraction, ClassBalancedTopFraction, CBSTRenormalized };
  Kind kind = Kind::TopFraction;
  double parameter = 1.0;  // threshold T or fraction alpha

  // Validates the parameter range for the kind.
  SelectionPolicy(Kind k, double p);
};

const char* to_string(SelectionPolicy::Kind k);
SelectionPolicy::Kind parse_selection_kind(const std::string& name);

// Argmax label when the max probability strictly exceeds threshold,
// otherwise ignored. The confidence is recorded in both cases.
std::vector<PseudoLabelRecord> threshold_pseudo_labels(std::span<const KeyedPrediction> predictions,
                                                       double threshold,
                                                       const LabelSource& source = {});

// Top floor(alpha * n) samples by confidence, ties by input order. Output is
// in ranked order; unselected samples are absent.
std::vector<PseudoLabelRecord> top_fraction_select(std::span<const KeyedPrediction> predictions,
                                                   double alpha, const LabelSource& source = {});

// Per predicted class c, the top floor(alpha * n_c) samples by confidence.
// Output keeps input order; unselected samples are absent.
std::vector<PseudoLabelRecord> class_balanced_select(std::span<const KeyedPrediction> predictions,
                                                     double alpha, const LabelSource& source = {});

// Pixel version: ranking is over all pixels of all maps predicted as c.
// Pixels not selected are set to the ignore label.
std::vector<PseudoLabelMap> class_balanced_select(std::span<const KeyedProbabilityMap> maps,
                                                  double alpha, const LabelSource& source = {});

// Class-wise thresholds used by CBST re-normalization: for class c, the
// confidence at rank floor(alpha * n_c) (1-indexed from the top) among items
// predicted as c. Classes that select nothing get threshold 1.
std::vector<double> cbst_class_thresholds(std::span<const KeyedProbabilityMap> maps, double alpha);
std::vector<double> cbst_class_thresholds(std::span<const KeyedPrediction> predictions,
                                          double alpha);

struct RenormalizedPrediction {
  ClassIndex label;
  double score;  // re-normalized max
};

// Divides probs element-wise by thresholds and returns the argmax and max.
RenormalizedPrediction cbst_renormalize(std::span<const double> probs,
                                        std::span<const double> thresholds);

// Re-normalized selection: a pixel is kept when its re-normalized max
// exceeds 1, labeled with the re-normalized argmax.
std::vector<PseudoLabelMap> cbst_renormalized_select(std::span<const KeyedProbabilityMap> maps,
                                                     double alpha, const LabelSource& source = {});
std::vector<PseudoLabelRecord> cbst_renormalized_select(
    std::span<const KeyedPrediction> predictions, double alpha, const LabelSource& source = {});

// Dispatches a record-level policy.
std::vector<PseudoLabelRecord> select(std::span<const KeyedPrediction> predictions,
                                      const SelectionPolicy& policy, const LabelSource& source = {});
// Dispatches a map-level policy. FixedThreshold and TopFraction act per pixel
// over the whole set.
std::vector<PseudoLabelMap> select(std::span<const KeyedProbabilityMap> maps,
                                   const SelectionPolicy& policy, const LabelSource& source = {});

}  // namespace dmt::pseudo
