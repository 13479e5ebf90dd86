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

#include "dmt/train/loop.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dmt/core/error.hpp"
#include "dmt/core/mixup.hpp"
#include "dmt/core/random.hpp"

namespace dmt::train {

namespace {

constexpr std::uint64_t kStreamLabeledSampler = 1;
constexpr std::uint64_t kStreamUnlabeledSampler = 2;
constexpr std::uint64_t kStreamAugment = 3;
constexpr std::uint64_t kStreamMixup = 4;

std::size_t parse_id(const std::string& id) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), out);
  if (ec != std::errc() || ptr != id.data() + id.size()) {
    throw ValidationError(fmt::format("sample id '{}' is not a dataset index", id));
  }
  return out;
}

std::string digest(const std::vector<std::size_t>& ids) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto id : ids) {
    for (int b = 0; b < 8; ++b) {
      h ^= (id >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  }
  return fmt::format("{:016x}", h);
}

// One assembled batch before the forward pass.
struct Assembled {
  nn::Tensor inputs;
  std::vector<std::size_t> ids;
  std::vector<bool> labeled;               // per row
  std::vector<ClassIndex> targets;         // per position; kIgnored when unscored
  std::vector<float> confidences;          // per position, unlabeled rows
};

}  // namespace

PseudoPool pool_from_records(std::span<const PseudoLabelRecord> records) {
  PseudoPool pool;
  for (const auto& r : records) {
    if (r.ignored()) continue;
    pool.ids.push_back(parse_id(r.sample_id));
    pool.labels.push_back(r.label);
    pool.confidences.push_back(static_cast<float>(r.confidence));
  }
  return pool;
}

PseudoPool pool_from_maps(std::span<const PseudoLabelMap> maps) {
  PseudoPool pool;
  for (const auto& m : maps) {
    const bool any = std::any_of(m.labels.begin(), m.labels.end(),
                                 [](std::uint8_t v) { return v != kIgnored; });
    if (!any) continue;
    pool.ids.push_back(parse_id(m.sample_id));
    pool.maps.push_back(m);
  }
  return pool;
}

std::vector<std::size_t> all_ids(const Dataset& data) {
  std::vector<std::size_t> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

TrainStats train_model(nn::Backbone& model, const Dataset& data,
                       std::span<const std::size_t> labeled_ids, const PseudoPool* pseudo,
                       std::span<const std::size_t> online_ids, const TrainSpec& spec,
                       std::vector<BatchTrace>* trace) {
  const bool online = spec.online_threshold.has_value();
  const bool seg = data.task == Task::Segmentation;
  if (seg && spec.mixup) throw ConfigError("mixup is only supported for classification");
  const std::size_t unlabeled_pool = online ? online_ids.size() : (pseudo ? pseudo->size() : 0);
  const auto& comp = spec.composition;
  const std::size_t per_epoch = steps_per_epoch(labeled_ids.size(), unlabeled_pool, comp);
  const std::size_t total_steps = per_epoch * spec.epochs;

  std::optional<PoolSampler> labeled_sampler, unlabeled_sampler;
  if (!labeled_ids.empty()) labeled_sampler.emplace(labeled_ids.size(), derive_seed(spec.seed, {kStreamLabeledSampler}));
  if (unlabeled_pool > 0) unlabeled_sampler.emplace(unlabeled_pool, derive_seed(spec.seed, {kStreamUnlabeledSampler}));
  auto aug_rng = make_rng(spec.seed, {kStreamAugment});
  auto mix_rng = make_rng(spec.seed, {kStreamMixup});

  nn::Sgd sgd(model.parameters().size(), spec.sgd);
  std::optional<metrics::EmaState> ema;
  if (spec.ema_decay > 0) ema = metrics::EmaState::track(model.parameters(), spec.ema_decay);

  const std::size_t c = data.num_classes;
  const std::size_t positions = seg ? data.pixels() : 1;
  TrainStats stats;
  double weight_sum = 0;
  std::size_t weight_count = 0;

  const auto started = std::chrono::steady_clock::now();
  for (std::size_t step = 0; step < total_steps; ++step) {
    if (spec.time_budget_seconds > 0 && step > 0 && step % per_epoch == 0) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
      if (elapsed.count() >= spec.time_budget_seconds) {
        spdlog::warn("time budget of {}s reached after {} of {} epochs", spec.time_budget_seconds,
                     step / per_epoch, spec.epochs);
        stats.budget_exhausted = true;
        stats.steps = step;
        break;
      }
    }
    const auto items = compose_batch(labeled_sampler ? &*labeled_sampler : nullptr,
                                     unlabeled_sampler ? &*unlabeled_sampler : nullptr, comp);
    const std::size_t b = items.size();
    Assembled batch;
    batch.ids.resize(b);
    batch.labeled.resize(b);
    batch.targets.assign(b * positions, static_cast<ClassIndex>(kIgnored));
    batch.confidences.assign(b * positions, 0.0f);
    for (std::size_t i = 0; i < b; ++i) {
      batch.labeled[i] = items[i].labeled;
      batch.ids[i] = items[i].labeled ? labeled_ids[items[i].position]
                                      : (online ? online_ids[items[i].position] : pseudo->ids[items[i].position]);
    }
    batch.inputs = data.gather(batch.ids);
    const std::size_t ss = data.sample_size();
    for (std::size_t i = 0; i < b; ++i) {
      std::span<float> image(batch.inputs.data() + i * ss, ss);
      const std::size_t pos = items[i].position;
      if (seg) {
        std::vector<std::uint8_t> mask;
        std::vector<float> conf;
        if (items[i].labeled) {
          mask = data.masks[batch.ids[i]];
        } else if (!online) {
          mask = pseudo->maps[pos].labels;
          conf = pseudo->maps[pos].confidences;
        }
        augment_sample(spec.augmentation, data.sample_shape, image, mask.empty() ? nullptr : &mask,
                       conf.empty() ? nullptr : &conf, aug_rng);
        for (std::size_t p = 0; p < mask.size(); ++p) {
          batch.targets[i * positions + p] = mask[p];
          if (!conf.empty()) batch.confidences[i * positions + p] = conf[p];
        }
      } else {
        augment_sample(spec.augmentation, data.sample_shape, image, nullptr, nullptr, aug_rng, spec.jitter_std);
        if (items[i].labeled) {
          batch.targets[i] = data.labels[batch.ids[i]];
        } else if (!online) {
          batch.targets[i] = pseudo->labels[pos];
          batch.confidences[i] = pseudo->confidences[pos];
        }
      }
    }

    // Forward pass on the unmixed batch: weights, online labels and trace.
    auto pass = model.forward(batch.inputs);
    const auto probs = nn::softmax_channels(pass.logits());
    GammaPair gammas = spec.gammas;
    if (spec.gamma_schedule) {
      const double ramp = gamma_schedule(static_cast<double>(step), static_cast<double>(total_steps),
                                         1.0, spec.gamma_sign);
      gammas = GammaPair(spec.gammas.gamma1 * ramp, spec.gammas.gamma2 * ramp);
    }
    std::vector<float> weights(b * positions, 0.0f);
    std::vector<ClassIndex> final_targets(b * positions, static_cast<ClassIndex>(kIgnored));
    BatchTrace bt;
    bt.step = step;
    bt.batch_digest = digest(batch.ids);
    std::vector<float> pv(c);
    std::vector<double> position_ce(b * positions, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t p = 0; p < positions; ++p) {
        const std::size_t k = i * positions + p;
        for (std::size_t j = 0; j < c; ++j) pv[j] = probs[(i * c + j) * positions + p];
        if (batch.labeled[i]) {
          if (batch.targets[k] == static_cast<ClassIndex>(kIgnored)) continue;
          final_targets[k] = batch.targets[k];
          weights[k] = 1.0f;
          ++bt.normalizer;
          continue;
        }
        if (online) {
          const ClassIndex y = argmax<float>(pv);
          if (pv[static_cast<std::size_t>(y)] > *spec.online_threshold) {
            final_targets[k] = y;
            weights[k] = 1.0f;
            ++bt.normalizer;
          }
          continue;
        }
        if (batch.targets[k] == static_cast<ClassIndex>(kIgnored)) continue;
        const auto wt = weigh_pseudo_label(spec.rule, batch.targets[k], batch.confidences[k], pv, gammas);
        final_targets[k] = wt.target;
        weights[k] = wt.weight;
        ++bt.normalizer;
        const double ce = cross_entropy<float>(pv, batch.targets[k]);
        bt.unit_unlabeled_loss += ce;
        switch (wt.case_tag) {
          case WeightCase::Agreement: ++bt.agreement; break;
          case WeightCase::NegativeDisagreement: ++bt.negative_disagreement; break;
          case WeightCase::PositiveDisagreement: ++bt.positive_disagreement; bt.case3_loss += ce; break;
          case WeightCase::Ignored: break;
        }
        weight_sum += wt.weight;
        ++weight_count;
      }
    }
    // Classification normalizes by the full batch, segmentation by scored pixels.
    const double norm = seg ? static_cast<double>(std::max<std::size_t>(bt.normalizer, 1))
                            : static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t p = 0; p < positions; ++p) {
        const std::size_t k = i * positions + p;
        if (final_targets[k] == static_cast<ClassIndex>(kIgnored)) continue;
        for (std::size_t j = 0; j < c; ++j) pv[j] = probs[(i * c + j) * positions + p];
        const double term = weights[k] * static_cast<double>(cross_entropy<float>(pv, final_targets[k]));
        (batch.labeled[i] ? bt.labeled_loss : bt.unlabeled_loss) += term;
      }
    }
    bt.labeled_loss /= norm;
    bt.unlabeled_loss /= norm;
    bt.unit_unlabeled_loss /= norm;
    bt.case3_loss /= norm;

    // Soft targets per position, then optional mixup of rows.
    std::vector<float> soft(b * c * positions, 0.0f);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t p = 0; p < positions; ++p) {
        const ClassIndex t = final_targets[i * positions + p];
        if (t != static_cast<ClassIndex>(kIgnored)) soft[(i * c + static_cast<std::size_t>(t)) * positions + p] = 1.0f;
      }
    }
    const nn::Tensor* grad_probs = &probs;
    nn::Tensor mixed_probs;
    if (spec.mixup) {
      const double lambda = draw_mixup_lambda(mix_rng, spec.mixup_alpha);
      std::vector<std::size_t> pairing(b);
      std::iota(pairing.begin(), pairing.end(), 0);
      std::shuffle(pairing.begin(), pairing.end(), mix_rng);
      MixupBatch mb{b, ss, c, std::vector<float>(batch.inputs.values().begin(), batch.inputs.values().end()),
                    soft, weights};
      auto mixed = mixup_batch(mb, pairing, lambda);
      batch.inputs = nn::Tensor(batch.inputs.shape(), std::move(mixed.inputs));
      soft = std::move(mixed.targets);
      weights = std::move(mixed.weights);
      pass = model.forward(batch.inputs);
      mixed_probs = nn::softmax_channels(pass.logits());
      grad_probs = &mixed_probs;
    }

    // Gradient of sum_k w_k * softCE(t_k, p_k) / norm.
    nn::Tensor grad(pass.logits().shape());
    double loss = 0;
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t p = 0; p < positions; ++p) {
        const float w = weights[i * positions + p];
        if (w == 0.0f) continue;
        double mass = 0;
        for (std::size_t j = 0; j < c; ++j) mass += soft[(i * c + j) * positions + p];
        if (mass == 0) continue;
        const float scale = static_cast<float>(w / norm);
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t idx = (i * c + j) * positions + p;
          const float pj = (*grad_probs)[idx];
          grad[idx] = scale * (pj * static_cast<float>(mass) - soft[idx]);
          if (soft[idx] > 0) loss -= w * soft[idx] * std::log(std::max(static_cast<double>(pj), kLogFloor)) / norm;
        }
      }
    }
    model.zero_grad();
    model.backward(pass, grad);
    sgd.step(model.parameters(), model.gradients(),
             nn::scheduled_lr(spec.learning_rate, step, total_steps, spec.lr_schedule));
    if (ema) metrics::ema_update(*ema, model.parameters());

    stats.last_loss = loss;
    stats.agreement += bt.agreement;
    stats.negative_disagreement += bt.negative_disagreement;
    stats.positive_disagreement += bt.positive_disagreement;
    if (trace) trace->push_back(std::move(bt));
  }
  if (!stats.budget_exhausted) stats.steps = total_steps;
  stats.mean_unlabeled_weight = weight_count ? weight_sum / static_cast<double>(weight_count) : 0.0;
  if (ema) std::copy(ema->shadow.begin(), ema->shadow.end(), model.parameters().begin());
  return stats;
}

nn::Tensor predict(const nn::Backbone& model, const Dataset& data,
                   std::span<const std::size_t> ids, std::size_t batch) {
  nn::Shape out_shape;
  std::vector<float> out;
  for (std::size_t start = 0; start < ids.size(); start += batch) {
    const auto chunk = ids.subspan(start, std::min(batch, ids.size() - start));
    const auto probs = model.predict_proba(data.gather(chunk));
    if (out_shape.empty()) {
      out_shape = probs.shape();
      out.reserve(ids.size() * probs.sample_size());
    }
    out.insert(out.end(), probs.values().begin(), probs.values().end());
  }
  if (out_shape.empty()) return nn::Tensor();
  out_shape[0] = ids.size();
  return nn::Tensor(out_shape, std::move(out));
}

std::vector<pseudo::KeyedPrediction> keyed_predictions(const nn::Backbone& model,
                                                       const Dataset& data,
                                                       std::span<const std::size_t> ids,
                                                       std::size_t batch) {
  const auto probs = predict(model, data, ids, batch);
  std::vector<pseudo::KeyedPrediction> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = probs.sample(i);
    std::vector<double> p(row.begin(), row.end());
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= sum;
    out.push_back({std::to_string(ids[i]), ProbabilityVector(std::move(p))});
  }
  return out;
}

std::vector<pseudo::KeyedProbabilityMap> keyed_maps(const nn::Backbone& model, const Dataset& data,
                                                    std::span<const std::size_t> ids,
                                                    std::size_t batch) {
  const auto probs = predict(model, data, ids, batch);
  std::vector<pseudo::KeyedProbabilityMap> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = probs.sample(i);
    out.push_back({std::to_string(ids[i]),
                   ProbabilityMap{data.num_classes, data.height(), data.width(),
                                  std::vector<float>(row.begin(), row.end())}});
  }
  return out;
}

ClassificationScore evaluate_classification(const nn::Backbone& model, const Dataset& data,
                                            std::span<const std::size_t> ids, std::size_t batch) {
  const auto preds = keyed_predictions(model, data, ids, batch);
  std::vector<ProbabilityVector> p;
  std::vector<ClassIndex> gt;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    p.push_back(preds[i].probs);
    gt.push_back(data.labels[ids[i]]);
  }
  return {metrics::accuracy(p, gt), metrics::fine_grained_score(p, gt)};
}

SegmentationScore evaluate_segmentation(const nn::Backbone& model, const Dataset& data,
                                        std::span<const std::size_t> ids, std::size_t batch) {
  const auto probs = predict(model, data, ids, batch);
  metrics::ConfusionMatrix cm(data.num_classes);
  const std::size_t c = data.num_classes, hw = data.pixels();
  std::vector<std::uint8_t> pred(hw);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = probs.sample(i);
    for (std::size_t p = 0; p < hw; ++p) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < c; ++j) {
        if (row[j * hw + p] > row[best * hw + p]) best = j;
      }
      pred[p] = static_cast<std::uint8_t>(best);
    }
    cm.add(data.masks[ids[i]], pred);
  }
  std::int64_t diag = 0;
  for (std::size_t j = 0; j < c; ++j) diag += cm.at(j, j);
  return {metrics::mean_iou(cm), static_cast<double>(diag) / static_cast<double>(cm.total())};
}

}  // namespace dmt::train
