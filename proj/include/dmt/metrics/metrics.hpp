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
#include <span>
#include <vector>

#include "dmt/core/probability.hpp"

namespace dmt::metrics {

// Fraction of samples whose predicted label equals the ground truth.
double accuracy(std::span<const ClassIndex> predicted, std::span<const ClassIndex> ground_truth);
double accuracy(std::span<const ProbabilityVector> predictions,
                std::span<const ClassIndex> ground_truth);

// Mean over samples of the true-class probability when the argmax is
// correct, 0 otherwise.
double fine_grained_score(std::span<const ProbabilityVector> predictions,
                          std::span<const ClassIndex> ground_truth);

// Rows are ground truth, columns are predictions. Pixels or samples whose
// ground truth is the ignore label are not counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  void add(ClassIndex ground_truth, ClassIndex predicted);
  void add(std::span<const std::uint8_t> ground_truth, std::span<const std::uint8_t> predicted);

  std::size_t num_classes() const { return num_classes_; }
  std::int64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * num_classes_ + predicted];
  }
  std::int64_t total() const;

 private:
  std::size_t num_classes_;
  std::vector<std::int64_t> counts_;
};

enum class ZeroDenominator { Exclude, ScoreZero };

struct IouReport {
  double mean_iou = 0.0;
  std::vector<double> per_class;  // NaN where the denominator is zero
};

IouReport iou(const ConfusionMatrix& cm, ZeroDenominator policy = ZeroDenominator::Exclude);
// Throws MetricError on an all-zero matrix.
double mean_iou(const ConfusionMatrix& cm, ZeroDenominator policy = ZeroDenominator::Exclude);

inline constexpr double kDefaultEmaDecay = 0.999;

struct EmaState {
  std::vector<float> shadow;
  double decay = kDefaultEmaDecay;

  static EmaState track(std::span<const float> parameters, double decay = kDefaultEmaDecay);
};

// shadow <- decay * shadow + (1 - decay) * current.
void ema_update(EmaState& ema, std::span<const float> current);

// round-half-up(sqrt(1 / labeled_ratio) * oracle_epochs).
int baseline_epochs(double labeled_ratio, int oracle_epochs);

}  // namespace dmt::metrics
