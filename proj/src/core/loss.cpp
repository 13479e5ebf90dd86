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

#include "dmt/core/loss.hpp"

#include <fmt/format.h>

#include "dmt/core/error.hpp"

namespace dmt {

namespace {

void check_label(ClassIndex label, std::size_t num_classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
    throw IndexError(fmt::format("class index {} out of range [0, {})", label, num_classes));
  }
}

void check_batch_size(std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("batch size N must be positive");
}

}  // namespace

GammaPair::GammaPair(double g1, double g2) : gamma1(g1), gamma2(g2) {
  if (!(g1 >= 0.0) || !(g2 >= 0.0)) {
    throw ValidationError(fmt::format("gammas must be non-negative, got ({}, {})", g1, g2));
  }
}

const char* to_string(WeightCase c) {
  switch (c) {
    case WeightCase::Agreement: return "agreement";
    case WeightCase::NegativeDisagreement: return "negative-disagreement";
    case WeightCase::PositiveDisagreement: return "positive-disagreement";
    case WeightCase::Ignored: return "ignored";
  }
  return "unknown";
}

double entropy(const ProbabilityVector& p) {
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

DynamicWeightResult dynamic_weight(ClassIndex pseudo_label, double pseudo_confidence,
                                   const ProbabilityVector& probs_b, const GammaPair& gammas) {
  check_label(pseudo_label, probs_b.num_classes());
  if (!(pseudo_confidence > 0.0 && pseudo_confidence <= 1.0)) {
    throw ValidationError(fmt::format("pseudo-label confidence {} outside (0, 1]", pseudo_confidence));
  }
  return dynamic_weight<double>(pseudo_label, pseudo_confidence, probs_b.values(), gammas);
}

WeightMap dynamic_weight_map(const PseudoLabelMap& pseudo, const ProbabilityMap& probs_b,
                             const GammaPair& gammas) {
  if (pseudo.height != probs_b.height || pseudo.width != probs_b.width) {
    throw ValidationError(fmt::format("pseudo-label map {}x{} does not match prediction map {}x{}",
                                      pseudo.height, pseudo.width, probs_b.height, probs_b.width));
  }
  validate_pseudo_map(pseudo);
  WeightMap out;
  out.height = pseudo.height;
  out.width = pseudo.width;
  out.weights.assign(pseudo.pixels(), 0.0f);
  out.cases.assign(pseudo.pixels(), WeightCase::Ignored);
  std::vector<float> pixel(probs_b.num_classes);
  for (std::size_t i = 0; i < pseudo.pixels(); ++i) {
    if (pseudo.ignored(i)) continue;
    check_label(pseudo.labels[i], probs_b.num_classes);
    for (std::size_t c = 0; c < probs_b.num_classes; ++c) pixel[c] = probs_b.at(c, i);
    const auto w = dynamic_weight<float>(pseudo.labels[i], pseudo.confidences[i],
                                         std::span<const float>(pixel), gammas);
    out.weights[i] = w.weight;
    out.cases[i] = w.case_tag;
  }
  return out;
}

double unlabeled_loss(std::span<const UnlabeledEntry> batch, const GammaPair& gammas,
                      std::size_t batch_size) {
  check_batch_size(batch_size);
  double sum = 0.0;
  for (const auto& e : batch) {
    const auto w = dynamic_weight(e.pseudo_label, e.confidence, e.probs_b, gammas);
    if (w.weight == 0.0) continue;
    sum += w.weight * cross_entropy<double>(e.probs_b.values(), e.pseudo_label);
  }
  return sum / static_cast<double>(batch_size);
}

double labeled_loss(std::span<const LabeledEntry> batch, std::size_t batch_size) {
  check_batch_size(batch_size);
  double sum = 0.0;
  for (const auto& e : batch) {
    check_label(e.label, e.probs_b.num_classes());
    sum += cross_entropy<double>(e.probs_b.values(), e.label);
  }
  return sum / static_cast<double>(batch_size);
}

LossBreakdown combined_loss(std::span<const LabeledEntry> labeled,
                            std::span<const UnlabeledEntry> unlabeled, const GammaPair& gammas,
                            std::size_t batch_size) {
  if (batch_size != labeled.size() + unlabeled.size()) {
    throw ValidationError(fmt::format("batch size {} != {} labeled + {} unlabeled", batch_size,
                                      labeled.size(), unlabeled.size()));
  }
  LossBreakdown out;
  out.labeled_loss = labeled_loss(labeled, batch_size);
  out.unlabeled_loss = unlabeled_loss(unlabeled, gammas, batch_size);
  out.combined = out.labeled_loss + out.unlabeled_loss;
  return out;
}

namespace {

void check_logit_batch(const LogitBatch& b) {
  if (b.num_classes == 0) throw ValidationError("logit batch has zero classes");
  if (b.labeled_logits.size() != b.labeled_rows() * b.num_classes ||
      b.unlabeled_logits.size() != b.unlabeled_rows() * b.num_classes ||
      b.pseudo_confidences.size() != b.unlabeled_rows()) {
    throw ValidationError("logit batch arrays are not aligned");
  }
  check_batch_size(b.labeled_rows() + b.unlabeled_rows());
  for (ClassIndex y : b.labels) check_label(y, b.num_classes);
  for (ClassIndex y : b.pseudo_labels) check_label(y, b.num_classes);
}

}  // namespace

LossBreakdown combined_loss_from_logits(const LogitBatch& batch, const GammaPair& gammas,
                                        std::optional<std::span<const double>> frozen_weights) {
  check_logit_batch(batch);
  const std::size_t c = batch.num_classes;
  const double n = static_cast<double>(batch.labeled_rows() + batch.unlabeled_rows());
  if (frozen_weights && frozen_weights->size() != batch.unlabeled_rows()) {
    throw ValidationError("frozen weights must have one entry per unlabeled row");
  }
  std::vector<double> probs(c);
  LossBreakdown out;
  for (std::size_t i = 0; i < batch.labeled_rows(); ++i) {
    softmax<double>(std::span(batch.labeled_logits).subspan(i * c, c), probs);
    out.labeled_loss += cross_entropy<double>(probs, batch.labels[i]);
  }
  for (std::size_t i = 0; i < batch.unlabeled_rows(); ++i) {
    softmax<double>(std::span(batch.unlabeled_logits).subspan(i * c, c), probs);
    const double w = frozen_weights
                         ? (*frozen_weights)[i]
                         : dynamic_weight<double>(batch.pseudo_labels[i],
                                                  batch.pseudo_confidences[i],
                                                  std::span<const double>(probs), gammas)
                               .weight;
    out.unlabeled_loss += w * cross_entropy<double>(probs, batch.pseudo_labels[i]);
  }
  out.labeled_loss /= n;
  out.unlabeled_loss /= n;
  out.combined = out.labeled_loss + out.unlabeled_loss;
  return out;
}

LossGradient combined_loss_gradient(const LogitBatch& batch, const GammaPair& gammas,
                                    WeightGradient mode) {
  check_logit_batch(batch);
  const std::size_t c = batch.num_classes;
  const double n = static_cast<double>(batch.labeled_rows() + batch.unlabeled_rows());
  LossGradient out;
  out.labeled_grad.assign(batch.labeled_logits.size(), 0.0);
  out.unlabeled_grad.assign(batch.unlabeled_logits.size(), 0.0);
  out.weights.resize(batch.unlabeled_rows());
  std::vector<double> probs(c);
  std::vector<double> onehot(c);

  for (std::size_t i = 0; i < batch.labeled_rows(); ++i) {
    softmax<double>(std::span(batch.labeled_logits).subspan(i * c, c), probs);
    std::fill(onehot.begin(), onehot.end(), 0.0);
    onehot[static_cast<std::size_t>(batch.labels[i])] = 1.0;
    out.loss.labeled_loss += cross_entropy<double>(probs, batch.labels[i]);
    accumulate_weighted_ce_grad<double>(probs, onehot, 1.0, 1.0 / n,
                                        std::span(out.labeled_grad).subspan(i * c, c));
  }
  for (std::size_t i = 0; i < batch.unlabeled_rows(); ++i) {
    softmax<double>(std::span(batch.unlabeled_logits).subspan(i * c, c), probs);
    const ClassIndex y = batch.pseudo_labels[i];
    const auto yi = static_cast<std::size_t>(y);
    const auto w = dynamic_weight<double>(y, batch.pseudo_confidences[i],
                                          std::span<const double>(probs), gammas);
    out.weights[i] = w.weight;
    const double ce = cross_entropy<double>(probs, y);
    out.loss.unlabeled_loss += w.weight * ce;
    auto grad = std::span(out.unlabeled_grad).subspan(i * c, c);
    std::fill(onehot.begin(), onehot.end(), 0.0);
    onehot[yi] = 1.0;
    accumulate_weighted_ce_grad<double>(probs, onehot, w.weight, 1.0 / n, grad);
    if (mode == WeightGradient::Full && w.case_tag != WeightCase::PositiveDisagreement) {
      // d(p_y^g)/dz_j = g * p_y^g * (delta_yj - p_j)
      const double g = w.case_tag == WeightCase::Agreement ? gammas.gamma1 : gammas.gamma2;
      for (std::size_t j = 0; j < c; ++j) {
        const double dw = g * w.weight * ((j == yi ? 1.0 : 0.0) - probs[j]);
        grad[j] += dw * ce / n;
      }
    }
  }
  out.loss.labeled_loss /= n;
  out.loss.unlabeled_loss /= n;
  out.loss.combined = out.loss.labeled_loss + out.loss.unlabeled_loss;
  return out;
}

}  // namespace dmt
