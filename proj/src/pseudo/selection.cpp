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

#include "dmt/pseudo/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "dmt/core/error.hpp"

namespace dmt::pseudo {

namespace {

void check_fraction(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError(fmt::format("selection fraction {} outside (0, 1]", alpha));
  }
}

// floor(alpha * n), tolerant of representation error in alpha (0.29 * 100).
std::size_t fraction_count(double alpha, std::size_t n) {
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) + 1e-9));
}

// Flattened prediction item: argmax label and confidence at a global index.
struct Item {
  ClassIndex label;
  float confidence;
};

bool ranks_before(const std::vector<Item>& items, std::size_t a, std::size_t b) {
  if (items[a].confidence != items[b].confidence) return items[a].confidence > items[b].confidence;
  return a < b;
}

// Returns a selection mask over items: per class, the top floor(alpha * n_c).
std::vector<bool> class_balanced_mask(const std::vector<Item>& items, std::size_t num_classes,
                                      double alpha) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < items.size(); ++i) {
    by_class[static_cast<std::size_t>(items[i].label)].push_back(i);
  }
  std::vector<bool> keep(items.size(), false);
  for (auto& members : by_class) {
    const std::size_t k = fraction_count(alpha, members.size());
    if (k == 0) continue;
    std::partial_sort(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k),
                      members.end(),
                      [&](std::size_t a, std::size_t b) { return ranks_before(items, a, b); });
    for (std::size_t r = 0; r < k; ++r) keep[members[r]] = true;
  }
  return keep;
}

std::vector<double> thresholds_from_items(const std::vector<Item>& items, std::size_t num_classes,
                                          double alpha) {
  std::vector<std::vector<float>> by_class(num_classes);
  for (const auto& it : items) by_class[static_cast<std::size_t>(it.label)].push_back(it.confidence);
  std::vector<double> thresholds(num_classes, 1.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& conf = by_class[c];
    const std::size_t k = fraction_count(alpha, conf.size());
    if (k == 0) continue;
    std::nth_element(conf.begin(), conf.begin() + static_cast<std::ptrdiff_t>(k - 1), conf.end(),
                     std::greater<>());
    thresholds[c] = conf[k - 1];
  }
  return thresholds;
}

std::vector<Item> items_from_maps(std::span<const KeyedProbabilityMap> maps,
                                  std::size_t& num_classes) {
  num_classes = maps.empty() ? 0 : maps.front().map.num_classes;
  std::size_t total = 0;
  for (const auto& m : maps) {
    if (m.map.num_classes != num_classes) {
      throw ValidationError("probability maps disagree on the number of classes");
    }
    if (m.map.probs.size() != m.map.num_classes * m.map.pixels()) {
      throw ValidationError(fmt::format("probability map '{}' has the wrong size", m.sample_id));
    }
    total += m.map.pixels();
  }
  std::vector<Item> items;
  items.reserve(total);
  std::vector<float> pixel(num_classes);
  for (const auto& m : maps) {
    for (std::size_t p = 0; p < m.map.pixels(); ++p) {
      for (std::size_t c = 0; c < num_classes; ++c) pixel[c] = m.map.at(c, p);
      const ClassIndex y = argmax<float>(pixel);
      items.push_back({y, pixel[static_cast<std::size_t>(y)]});
    }
  }
  return items;
}

std::vector<Item> items_from_predictions(std::span<const KeyedPrediction> predictions,
                                         std::size_t& num_classes) {
  num_classes = predictions.empty() ? 0 : predictions.front().probs.num_classes();
  std::vector<Item> items;
  items.reserve(predictions.size());
  for (const auto& p : predictions) {
    if (p.probs.num_classes() != num_classes) {
      throw ValidationError("predictions disagree on the number of classes");
    }
    items.push_back({p.probs.argmax(), static_cast<float>(p.probs.max())});
  }
  return items;
}

PseudoLabelRecord make_record(const KeyedPrediction& p, ClassIndex label,
                              const LabelSource& source) {
  return {p.sample_id, label, p.probs.max(), source.source_model, source.iteration};
}

// Builds output maps from a per-pixel label assignment (kIgnored = drop).
std::vector<PseudoLabelMap> maps_from_labels(std::span<const KeyedProbabilityMap> maps,
                                             const std::vector<Item>& items,
                                             const std::vector<ClassIndex>& labels,
                                             const LabelSource& source) {
  std::vector<PseudoLabelMap> out;
  out.reserve(maps.size());
  std::size_t offset = 0;
  for (const auto& m : maps) {
    PseudoLabelMap pl;
    pl.sample_id = m.sample_id;
    pl.height = m.map.height;
    pl.width = m.map.width;
    pl.source_model = source.source_model;
    pl.iteration = source.iteration;
    pl.labels.resize(m.map.pixels());
    pl.confidences.resize(m.map.pixels());
    for (std::size_t p = 0; p < m.map.pixels(); ++p) {
      pl.labels[p] = static_cast<std::uint8_t>(labels[offset + p]);
      pl.confidences[p] = items[offset + p].confidence;
    }
    offset += m.map.pixels();
    out.push_back(std::move(pl));
  }
  return out;
}

}  // namespace

SelectionPolicy::SelectionPolicy(Kind k, double p) : kind(k), parameter(p) {
  if (k == Kind::FixedThreshold) {
    if (!(p >= 0.0 && p < 1.0)) {
      throw ValidationError(fmt::format("threshold {} outside [0, 1)", p));
    }
  } else {
    check_fraction(p);
  }
}

const char* to_string(SelectionPolicy::Kind k) {
  switch (k) {
    case SelectionPolicy::Kind::FixedThreshold: return "threshold";
    case SelectionPolicy::Kind::TopFraction: return "top-fraction";
    case SelectionPolicy::Kind::ClassBalancedTopFraction: return "class-balanced";
    case SelectionPolicy::Kind::CBSTRenormalized: return "cbst";
  }
  return "unknown";
}

SelectionPolicy::Kind parse_selection_kind(const std::string& name) {
  using K = SelectionPolicy::Kind;
  for (K k : {K::FixedThreshold, K::TopFraction, K::ClassBalancedTopFraction, K::CBSTRenormalized}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError(fmt::format("unknown selection policy '{}'", name));
}

std::vector<PseudoLabelRecord> threshold_pseudo_labels(std::span<const KeyedPrediction> predictions,
                                                       double threshold,
                                                       const LabelSource& source) {
  SelectionPolicy(SelectionPolicy::Kind::FixedThreshold, threshold);
  std::vector<PseudoLabelRecord> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    const ClassIndex label = p.probs.max() > threshold ? p.probs.argmax() : kIgnored;
    out.push_back(make_record(p, label, source));
  }
  return out;
}

std::vector<PseudoLabelRecord> top_fraction_select(std::span<const KeyedPrediction> predictions,
                                                   double alpha, const LabelSource& source) {
  check_fraction(alpha);
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = fraction_count(alpha, predictions.size());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].probs.max() > predictions[b].probs.max();
  });
  std::vector<PseudoLabelRecord> out;
  out.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const auto& p = predictions[order[r]];
    out.push_back(make_record(p, p.probs.argmax(), source));
  }
  return out;
}

std::vector<PseudoLabelRecord> class_balanced_select(std::span<const KeyedPrediction> predictions,
                                                     double alpha, const LabelSource& source) {
  check_fraction(alpha);
  std::size_t num_classes = 0;
  const auto items = items_from_predictions(predictions, num_classes);
  const auto keep = class_balanced_mask(items, num_classes, alpha);
  std::vector<PseudoLabelRecord> out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (keep[i]) out.push_back(make_record(predictions[i], items[i].label, source));
  }
  return out;
}

std::vector<PseudoLabelMap> class_balanced_select(std::span<const KeyedProbabilityMap> maps,
                                                  double alpha, const LabelSource& source) {
  check_fraction(alpha);
  std::size_t num_classes = 0;
  const auto items = items_from_maps(maps, num_classes);
  const auto keep = class_balanced_mask(items, num_classes, alpha);
  std::vector<ClassIndex> labels(items.size(), kIgnored);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (keep[i]) labels[i] = items[i].label;
  }
  return maps_from_labels(maps, items, labels, source);
}

std::vector<double> cbst_class_thresholds(std::span<const KeyedProbabilityMap> maps, double alpha) {
  check_fraction(alpha);
  std::size_t num_classes = 0;
  const auto items = items_from_maps(maps, num_classes);
  return thresholds_from_items(items, num_classes, alpha);
}

std::vector<double> cbst_class_thresholds(std::span<const KeyedPrediction> predictions,
                                          double alpha) {
  check_fraction(alpha);
  std::size_t num_classes = 0;
  const auto items = items_from_predictions(predictions, num_classes);
  return thresholds_from_items(items, num_classes, alpha);
}

RenormalizedPrediction cbst_renormalize(std::span<const double> probs,
                                        std::span<const double> thresholds) {
  if (probs.size() != thresholds.size() || probs.empty()) {
    throw ValidationError("probabilities and thresholds must have the same non-zero length");
  }
  RenormalizedPrediction best{0, probs[0] / thresholds[0]};
  for (std::size_t c = 1; c < probs.size(); ++c) {
    const double v = probs[c] / thresholds[c];
    if (v > best.score) best = {static_cast<ClassIndex>(c), v};
  }
  return best;
}

std::vector<PseudoLabelMap> cbst_renormalized_select(std::span<const KeyedProbabilityMap> maps,
                                                     double alpha, const LabelSource& source) {
  check_fraction(alpha);
  std::size_t num_classes = 0;
  const auto items = items_from_maps(maps, num_classes);
  const auto thresholds = thresholds_from_items(items, num_classes, alpha);
  std::vector<ClassIndex> labels(items.size(), kIgnored);
  std::vector<double> pixel(num_classes);
  std::size_t offset = 0;
  for (const auto& m : maps) {
    for (std::size_t p = 0; p < m.map.pixels(); ++p) {
      for (std::size_t c = 0; c < num_classes; ++c) pixel[c] = m.map.at(c, p);
      const auto r = cbst_renormalize(pixel, thresholds);
      if (r.score > 1.0) labels[offset + p] = r.label;
    }
    offset += m.map.pixels();
  }
  return maps_from_labels(maps, items, labels, source);
}

std::vector<PseudoLabelRecord> cbst_renormalized_select(
    std::span<const KeyedPrediction> predictions, double alpha, const LabelSource& source) {
  const auto thresholds = cbst_class_thresholds(predictions, alpha);
  std::vector<PseudoLabelRecord> out;
  for (const auto& p : predictions) {
    const auto r = cbst_renormalize(p.probs.values(), thresholds);
    if (r.score > 1.0) out.push_back(make_record(p, r.label, source));
  }
  return out;
}

std::vector<PseudoLabelRecord> select(std::span<const KeyedPrediction> predictions,
                                      const SelectionPolicy& policy, const LabelSource& source) {
  using K = SelectionPolicy::Kind;
  switch (policy.kind) {
    case K::FixedThreshold: {
      auto all = threshold_pseudo_labels(predictions, policy.parameter, source);
      std::erase_if(all, [](const PseudoLabelRecord& r) { return r.ignored(); });
      return all;
    }
    case K::TopFraction: return top_fraction_select(predictions, policy.parameter, source);
    case K::ClassBalancedTopFraction:
      return class_balanced_select(predictions, policy.parameter, source);
    case K::CBSTRenormalized: return cbst_renormalized_select(predictions, policy.parameter, source);
  }
  return {};
}

std::vector<PseudoLabelMap> select(std::span<const KeyedProbabilityMap> maps,
                                   const SelectionPolicy& policy, const LabelSource& source) {
  using K = SelectionPolicy::Kind;
  switch (policy.kind) {
    case K::ClassBalancedTopFraction: return class_balanced_select(maps, policy.parameter, source);
    case K::CBSTRenormalized: return cbst_renormalized_select(maps, policy.parameter, source);
    case K::FixedThreshold:
    case K::TopFraction: {
      std::size_t num_classes = 0;
      const auto items = items_from_maps(maps, num_classes);
      std::vector<ClassIndex> labels(items.size(), kIgnored);
      if (policy.kind == K::FixedThreshold) {
        for (std::size_t i = 0; i < items.size(); ++i) {
          if (items[i].confidence > policy.parameter) labels[i] = items[i].label;
        }
      } else {
        std::vector<std::size_t> order(items.size());
        std::iota(order.begin(), order.end(), 0);
        const std::size_t k = fraction_count(policy.parameter, items.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                          order.end(),
                          [&](std::size_t a, std::size_t b) { return ranks_before(items, a, b); });
        for (std::size_t r = 0; r < k; ++r) labels[order[r]] = items[order[r]].label;
      }
      return maps_from_labels(maps, items, labels, source);
    }
  }
  return {};
}

}  // namespace dmt::pseudo
