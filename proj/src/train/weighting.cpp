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

#include "dmt/train/weighting.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt::train {

WeightRule parse_weight_rule(const std::string& name) {
  for (auto r : {WeightRule::Dynamic, WeightRule::Unit, WeightRule::Naive, WeightRule::Flip}) {
    if (name == to_string(r)) return r;
  }
  throw ConfigError(fmt::format("unknown weight rule '{}'", name));
}

const char* to_string(WeightRule r) {
  switch (r) {
    case WeightRule::Dynamic: return "dynamic";
    case WeightRule::Unit: return "unit";
    case WeightRule::Naive: return "naive";
    case WeightRule::Flip: return "flip";
  }
  return "unknown";
}

WeightedTarget weigh_pseudo_label(WeightRule rule, ClassIndex pseudo_label, float pseudo_confidence,
                                  std::span<const float> probs_b, const GammaPair& gammas) {
  const auto dyn = dynamic_weight<float>(pseudo_label, pseudo_confidence, probs_b, gammas);
  switch (rule) {
    case WeightRule::Dynamic:
      return {pseudo_label, dyn.weight, dyn.case_tag};
    case WeightRule::Unit:
      return {pseudo_label, 1.0f, dyn.case_tag};
    case WeightRule::Naive:
      return {pseudo_label, probs_b[static_cast<std::size_t>(pseudo_label)], dyn.case_tag};
    case WeightRule::Flip:
      if (dyn.case_tag == WeightCase::PositiveDisagreement) {
        const float w = static_cast<float>(std::pow(1.0 - static_cast<double>(pseudo_confidence), gammas.gamma2));
        return {argmax<float>(probs_b), w, dyn.case_tag};
      }
      return {pseudo_label, dyn.weight, dyn.case_tag};
  }
  return {pseudo_label, dyn.weight, dyn.case_tag};
}

}  // namespace dmt::train
