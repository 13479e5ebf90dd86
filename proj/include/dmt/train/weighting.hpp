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

#include "dmt/core/loss.hpp"

namespace dmt::train {

// How a pseudo-labeled position turns into a training target and weight.
enum class WeightRule {
  Dynamic,  // three-case disagreement weight
  Unit,     // weight 1 everywhere (plain self-training)
  Naive,    // weight p_B[y_A], no case split and no exponent
  Flip,     // like Dynamic, but positive disagreement retargets to y_B with (1 - c_A)^gamma2
};

WeightRule parse_weight_rule(const std::string& name);
const char* to_string(WeightRule r);

struct WeightedTarget {
  ClassIndex target;
  float weight;
  WeightCase case_tag;  // three-case classification, recorded for every rule
};

// probs_b is the distribution of the model in training at this position.
WeightedTarget weigh_pseudo_label(WeightRule rule, ClassIndex pseudo_label, float pseudo_confidence,
                                  std::span<const float> probs_b, const GammaPair& gammas);

}  // namespace dmt::train
