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

#include "dmt/metrics/metrics.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "dmt/core/error.hpp"

namespace dmt::metrics {

namespace {

void check_aligned(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError(fmt::format("{} predictions for {} ground-truth labels", a, b));
}

}  // namespace

double accuracy(std::span<const ClassIndex> predicted, std::span<const ClassIndex> ground_truth) {
  check_aligned(predicted.size(), ground_truth.size());
  if (predicted.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == ground_truth[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

double accuracy(std::span<const ProbabilityVector> predictions,
                std::span<const ClassIndex> ground_truth) {
  check_aligned(predictions.size(), ground_truth.size());
  std::vector<ClassIndex> labels;
  labels.reserve(predictions.size());
  for (const auto& p : predictions) labels.push_back(p.argmax());
  return accuracy(labels, ground_truth);
}

double fine_grained_score(std::span<const ProbabilityVector> predictions,
                          std::span<const ClassIndex> ground_truth) {
  check_aligned(predictions.size(), ground_truth.size());
  if (predictions.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const ClassIndex y = ground_truth[i];
    if (y < 0 || static_cast<std::size_t>(y) >= p.num_classes()) {
      throw IndexError(fmt::format("ground-truth class {} out of range", y));
    }
    if (p.argmax() == y) sum += p[static_cast<std::size_t>(y)];
  }
  return sum / static_cast<double>(predictions.size());
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw ValidationError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.size()) throw ValidationError("confusion matrix must be square");
    for (std::size_t c = 0; c < rows.size(); ++c) {
      if (rows[r][c] < 0) throw ValidationError("confusion matrix counts must be non-negative");
      cm.counts_[r * cm.num_classes_ + c] = rows[r][c];
    }
  }
  return cm;
}

void ConfusionMatrix::add(ClassIndex ground_truth, ClassIndex predicted) {
  if (ground_truth == kIgnored) return;
  const auto n = static_cast<ClassIndex>(num_classes_);
  if (ground_truth < 0 || ground_truth >= n || predicted < 0 || predicted >= n) {
    throw IndexError(fmt::format("class pair ({}, {}) out of range [0, {})", ground_truth, predicted, n));
  }
  ++counts_[static_cast<std::size_t>(ground_truth) * num_classes_ + static_cast<std::size_t>(predicted)];
}

void ConfusionMatrix::add(std::span<const std::uint8_t> ground_truth,
                          std::span<const std::uint8_t> predicted) {
  check_aligned(predicted.size(), ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) add(ground_truth[i], predicted[i]);
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto v : counts_) t += v;
  return t;
}

IouReport iou(const ConfusionMatrix& cm, ZeroDenominator policy) {
  if (cm.total() == 0) throw MetricError("mean IoU is undefined for an empty confusion matrix");
  const std::size_t n = cm.num_classes();
  IouReport report;
  report.per_class.assign(n, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::int64_t row = 0, col = 0;
    for (std::size_t k = 0; k < n; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    const std::int64_t tp = cm.at(c, c);
    const std::int64_t denom = row + col - tp;  // TP + FN + FP
    if (denom == 0) {
      if (policy == ZeroDenominator::ScoreZero) ++counted;
      continue;
    }
    report.per_class[c] = static_cast<double>(tp) / static_cast<double>(denom);
    sum += report.per_class[c];
    ++counted;
  }
  report.mean_iou = sum / static_cast<double>(counted);
  return report;
}

double mean_iou(const ConfusionMatrix& cm, ZeroDenominator policy) { return iou(cm, policy).mean_iou; }

EmaState EmaState::track(std::span<const float> parameters, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw ValidationError(fmt::format("EMA decay {} outside [0, 1]", decay));
  return {std::vector<float>(parameters.begin(), parameters.end()), decay};
}

void ema_update(EmaState& ema, std::span<const float> current) {
  if (ema.shadow.size() != current.size()) {
    throw ValidationError(fmt::format("EMA tracks {} parameters, got {}", ema.shadow.size(), current.size()));
  }
  const double d = ema.decay;
  for (std::size_t i = 0; i < current.size(); ++i) {
    ema.shadow[i] = static_cast<float>(d * ema.shadow[i] + (1.0 - d) * current[i]);
  }
}

int baseline_epochs(double labeled_ratio, int oracle_epochs) {
  if (!(labeled_ratio > 0.0 && labeled_ratio <= 1.0)) {
    throw ValidationError(fmt::format("labeled ratio {} outside (0, 1]", labeled_ratio));
  }
  if (oracle_epochs <= 0) throw ValidationError("oracle epochs must be positive");
  return static_cast<int>(std::floor(std::sqrt(1.0 / labeled_ratio) * oracle_epochs + 0.5));
}

}  // namespace dmt::metrics
