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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dmt/pseudo/types.hpp"

namespace dmt::pseudo {

struct QuantileError {
  double fraction = 0.0;  // top fraction by confidence
  std::size_t count = 0;
  std::size_t errors = 0;
  double error_rate = 0.0;
};

struct ErrorReport {
  std::size_t total = 0;
  std::size_t errors = 0;
  double overall_error = 0.0;
  std::vector<QuantileError> quantiles;  // in the order requested
};

inline const std::vector<double> kDefaultQuantiles = {0.2, 0.4, 0.6, 0.8};

// Audit of pseudo-label errors by confidence quantile. Each quantile keeps
// the top floor(q * n) labels by confidence (ties by input order). Ignored
// records are skipped; a labeled record without ground truth throws.
ErrorReport pseudo_label_error_stats(std::span<const PseudoLabelRecord> records,
                                     const std::map<std::string, ClassIndex>& ground_truth,
                                     std::span<const double> quantiles = kDefaultQuantiles);

// Pixel-level audit; ground_truth holds one mask per map (same order).
// Pixels whose ground truth is the ignore label are skipped.
ErrorReport pseudo_label_error_stats(std::span<const PseudoLabelMap> maps,
                                     std::span<const std::vector<std::uint8_t>> ground_truth,
                                     std::span<const double> quantiles = kDefaultQuantiles);

}  // namespace dmt::pseudo
