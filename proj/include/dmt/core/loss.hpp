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

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dmt/core/probability.hpp"
#include "dmt/pseudo/types.hpp"

namespace dmt {

// Floor applied to probabilities before taking a log.
inline constexpr double kLogFloor = 1e-12;

struct GammaPair {
  double gamma1 = 0.0;
  double gamma2 = 0.0;

  GammaPair() = default;
  GammaPair(double g1, double g2);  // validates g1, g2 >= 0
  static GammaPair uniform(double gamma) { return {gamma, gamma}; }
};

enum class WeightCase : std::uint8_t {
  Agreement,
  NegativeDisagreement,
  PositiveDisagreement,
  Ignored,
};

const char* to_string(WeightCase c);

template <std::floating_point T>
struct BasicDynamicWeight {
  T weight = 0;
  WeightCase case_tag = WeightCase::Ignored;
};

using DynamicWeightResult = BasicDynamicWeight<double>;

// Shannon entropy in nats; 0*log(0) is taken as 0.
double entropy(const ProbabilityVector& p);

// Cross-entropy of a hard class under probs, with the log floor applied.
template <std::floating_point T>
T cross_entropy(std::span<const T> probs, ClassIndex label) {
  const T p = std::max(probs[static_cast<std::size_t>(label)], static_cast<T>(kLogFloor));
  return -std::log(p);
}

// Cross-entropy against a soft target distribution; zero-mass target
// entries contribute nothing.
template <std::floating_point T>
T soft_cross_entropy(std::span<const T> probs, std::span<const T> target) {
  T sum = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (target[c] == 0) continue;
    sum -= target[c] * std::log(std::max(probs[c], static_cast<T>(kLogFloor)));
  }
  return sum;
}

// The three-case disagreement weight. probs_b is the distribution of the
// model in training; its argmax (lowest index on ties) and max are the
// prediction and confidence of that model.
template <std::floating_point T>
BasicDynamicWeight<T> dynamic_weight(ClassIndex pseudo_label, T pseudo_confidence,
                                     std::span<const T> probs_b, const GammaPair& gammas) {
  const ClassIndex predicted = argmax<T>(probs_b);
  const T confidence_b = probs_b[static_cast<std::size_t>(predicted)];
  const T p_b = probs_b[static_cast<std::size_t>(pseudo_label)];
  if (predicted == pseudo_label) {
    return {static_cast<T>(std::pow(p_b, static_cast<T>(gammas.gamma1))), WeightCase::Agreement};
  }
  if (pseudo_confidence >= confidence_b) {
    return {static_cast<T>(std::pow(p_b, static_cast<T>(gammas.gamma2))),
            WeightCase::NegativeDisagreement};
  }
  return {T{0}, WeightCase::PositiveDisagreement};
}

// Validating entry point: checks the distribution, the label range and
// that the pseudo-label confidence lies in (0, 1].
DynamicWeightResult dynamic_weight(ClassIndex pseudo_label, double pseudo_confidence,
                                   const ProbabilityVector& probs_b, const GammaPair& gammas);

struct WeightMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> weights;
  std::vector<WeightCase> cases;
};

// Pixel-wise dynamic weights; ignored pixels get weight 0 and the Ignored tag.
WeightMap dynamic_weight_map(const PseudoLabelMap& pseudo, const ProbabilityMap& probs_b,
                             const GammaPair& gammas);

struct UnlabeledEntry {
  ClassIndex pseudo_label;
  double confidence;
  ProbabilityVector probs_b;
};

struct LabeledEntry {
  ClassIndex label;
  ProbabilityVector probs_b;
};

struct LossBreakdown {
  double labeled_loss = 0.0;
  double unlabeled_loss = 0.0;
  double combined = 0.0;
};

// Dynamic loss on pseudo-labeled samples, normalized by the full batch size.
double unlabeled_loss(std::span<const UnlabeledEntry> batch, const GammaPair& gammas,
                      std::size_t batch_size);

// Mean cross-entropy on labeled samples, normalized by the full batch size.
double labeled_loss(std::span<const LabeledEntry> batch, std::size_t batch_size);

// Requires batch_size == labeled.size() + unlabeled.size().
LossBreakdown combined_loss(std::span<const LabeledEntry> labeled,
                            std::span<const UnlabeledEntry> unlabeled, const GammaPair& gammas,
                            std::size_t batch_size);

// Logit-space view of a mixed batch, rows are row-major [rows][num_classes].
struct LogitBatch {
  std::size_t num_classes = 0;
  std::vector<ClassIndex> labels;           // labeled rows
  std::vector<double> labeled_logits;
  std::vector<ClassIndex> pseudo_labels;    // unlabeled rows
  std::vector<double> pseudo_confidences;
  std::vector<double> unlabeled_logits;

  std::size_t labeled_rows() const { return labels.size(); }
  std::size_t unlabeled_rows() const { return pseudo_labels.size(); }
};

// Whether the dynamic weight takes part in differentiation. Training uses
// Detached (the weight is a constant of each step).
enum class WeightGradient { Detached, Full };

struct LossGradient {
  LossBreakdown loss;
  std::vector<double> labeled_grad;
  std::vector<double> unlabeled_grad;
  std::vector<double> weights;
};

// Combined loss evaluated from logits. frozen_weights, when given, replaces
// the per-row dynamic weights (one per unlabeled row).
LossBreakdown combined_loss_from_logits(const LogitBatch& batch, const GammaPair& gammas,
                                        std::optional<std::span<const double>> frozen_weights =
                                            std::nullopt);

// Analytic gradient of combined_loss_from_logits with respect to every logit.
LossGradient combined_loss_gradient(const LogitBatch& batch, const GammaPair& gammas,
                                    WeightGradient mode);

// Gradient of weight * CE(target, softmax(z)) with respect to z, for a target
// that sums to one: weight * (p - target) * scale.
template <std::floating_point T>
void accumulate_weighted_ce_grad(std::span<const T> probs, std::span<const T> target, T weight,
                                 T scale, std::span<T> grad) {
  const T k = weight * scale;
  for (std::size_t c = 0; c < probs.size(); ++c) grad[c] += k * (probs[c] - target[c]);
}

}  // namespace dmt
