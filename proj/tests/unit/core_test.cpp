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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dmt/core/error.hpp"
#include "dmt/core/gamma_schedule.hpp"
#include "dmt/core/loss.hpp"
#include "dmt/core/mixup.hpp"
#include "dmt/core/probability.hpp"
#include "dmt/core/rational.hpp"
#include "dmt/pseudo/types.hpp"

namespace dmt {
namespace {

// Case-by-case weight oracle, written without the library's argmax helper.
DynamicWeightResult OracleWeight(int y_a, double c_a, const std::vector<double>& p,
                                 double g1, double g2) {
  int y_b = 0;
  double c_b = p[0];
  for (int c = 1; c < static_cast<int>(p.size()); ++c) {
    if (p[c] > c_b) {
      c_b = p[c];
      y_b = c;
    }
  }
  if (y_a == y_b) return {std::pow(p[y_a], g1), WeightCase::Agreement};
  if (!(c_a < c_b)) return {std::pow(p[y_a], g2), WeightCase::NegativeDisagreement};
  return {0.0, WeightCase::PositiveDisagreement};
}

std::vector<double> RandomSimplex(std::mt19937_64& rng, std::size_t k) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> p(k);
  double sum = 0;
  for (auto& v : p) sum += (v = g(rng));
  for (auto& v : p) v /= sum;
  return p;
}

TEST(ProbabilityVectorTest, RejectsInvalidDistributions) {
  EXPECT_THROW(ProbabilityVector({0.5, 0.6}), ValidationError);
  EXPECT_THROW(ProbabilityVector({1.2, -0.2}), ValidationError);
  EXPECT_THROW(ProbabilityVector({}), ValidationError);
  EXPECT_NO_THROW(ProbabilityVector({0.5, 0.5 + 1e-6}));
}

TEST(ProbabilityVectorTest, ArgmaxTiesPickLowestIndex) {
  EXPECT_EQ(ProbabilityVector({0.25, 0.375, 0.375}).argmax(), 1);
  EXPECT_EQ(ProbabilityVector({0.5, 0.5}).argmax(), 0);
}

TEST(ProbabilityVectorTest, FromLogitsIsStable) {
  const std::vector<double> logits{1000.0, 1000.0};
  const auto p = ProbabilityVector::from_logits(logits);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
}

TEST(EntropyTest, WorkedExamples) {
  EXPECT_EQ(entropy(ProbabilityVector({1, 0, 0, 0})), 0.0);
  EXPECT_NEAR(entropy(ProbabilityVector({0.5, 0.5})), std::log(2.0), 1e-12);
  EXPECT_NEAR(entropy(ProbabilityVector({0.25, 0.25, 0.25, 0.25})), 1.3863, 1e-4);
}

TEST(EntropyTest, BoundedByLogClasses) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + i % 6;
    const double h = entropy(ProbabilityVector(RandomSimplex(rng, k)));
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(k)) + 1e-9);
  }
}

TEST(DynamicWeightTest, WorkedExamples) {
  auto r = dynamic_weight(0, 0.9, ProbabilityVector({0.5, 0.5}), GammaPair(5, 5));
  EXPECT_DOUBLE_EQ(r.weight, 0.03125);
  EXPECT_EQ(r.case_tag, WeightCase::Agreement);

  r = dynamic_weight(0, 0.9, ProbabilityVector({0.3, 0.7}), GammaPair(5, 5));
  EXPECT_NEAR(r.weight, 0.00243, 1e-15);
  EXPECT_EQ(r.case_tag, WeightCase::NegativeDisagreement);

  r = dynamic_weight(0, 0.6, ProbabilityVector({0.2, 0.8}), GammaPair(5, 5));
  EXPECT_EQ(r.weight, 0.0);
  EXPECT_EQ(r.case_tag, WeightCase::PositiveDisagreement);
}

TEST(DynamicWeightTest, EqualConfidenceIsNegativeDisagreement) {
  const auto r = dynamic_weight(0, 0.75, ProbabilityVector({0.25, 0.75}), GammaPair(1, 2));
  EXPECT_EQ(r.case_tag, WeightCase::NegativeDisagreement);
  EXPECT_DOUBLE_EQ(r.weight, 0.0625);
}

TEST(DynamicWeightTest, Errors) {
  const ProbabilityVector p({0.5, 0.5});
  EXPECT_THROW(dynamic_weight(2, 0.9, p, GammaPair(1, 1)), IndexError);
  EXPECT_THROW(dynamic_weight(-1, 0.9, p, GammaPair(1, 1)), IndexError);
  EXPECT_THROW(dynamic_weight(0, 0.0, p, GammaPair(1, 1)), ValidationError);
  EXPECT_THROW(dynamic_weight(0, 1.5, p, GammaPair(1, 1)), ValidationError);
  EXPECT_THROW(GammaPair(-1, 1), ValidationError);
}

TEST(DynamicWeightTest, MatchesOracleOnRandomTuples) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const std::size_t k = 2 + i % 5;
    auto p = RandomSimplex(rng, k);
    // Occasionally force ties in the distribution and against c_A.
    if (i % 17 == 0) p.assign(k, 1.0 / static_cast<double>(k));
    const int y_a = static_cast<int>(rng() % k);
    double c_a = std::max(1e-6, unit(rng));
    if (i % 13 == 0) c_a = *std::max_element(p.begin(), p.end());
    const double g1 = unit(rng) * 8, g2 = unit(rng) * 8;
    const auto got = dynamic_weight(y_a, c_a, ProbabilityVector(p), GammaPair(g1, g2));
    const auto want = OracleWeight(y_a, c_a, p, g1, g2);
    ASSERT_EQ(got.case_tag, want.case_tag) << "tuple " << i;
    ASSERT_EQ(got.weight, want.weight) << "tuple " << i;
    ASSERT_GE(got.weight, 0.0);
    ASSERT_LE(got.weight, 1.0);
  }
}

TEST(DynamicWeightTest, MonotoneInConfidenceAndGamma) {
  // Fixed Agreement case: y_A = 0 and p_B[0] the largest entry.
  double prev = -1;
  for (double pb = 0.5; pb <= 1.0; pb += 0.05) {
    const double w = dynamic_weight(0, 0.9, ProbabilityVector({pb, 1 - pb}), GammaPair(3, 3)).weight;
    EXPECT_GE(w, prev);
    prev = w;
  }
  prev = 2;
  for (double g = 0; g <= 10; g += 0.5) {
    const double w = dynamic_weight(0, 0.9, ProbabilityVector({0.6, 0.4}), GammaPair(g, g)).weight;
    EXPECT_LE(w, prev);
    prev = w;
  }
}

TEST(DynamicWeightMapTest, MatchesPixelLoop) {
  PseudoLabelMap pseudo;
  pseudo.height = 2;
  pseudo.width = 2;
  pseudo.labels = {0, 1, 2, kIgnored};
  pseudo.confidences = {0.9f, 0.95f, 0.3f, 0.5f};
  ProbabilityMap probs{3, 2, 2, {}};
  const std::vector<std::vector<double>> pixel = {
      {0.7, 0.2, 0.1}, {0.1, 0.3, 0.6}, {0.2, 0.7, 0.1}, {0.3, 0.3, 0.4}};
  probs.probs.resize(12);
  for (std::size_t p = 0; p < 4; ++p) {
    for (std::size_t c = 0; c < 3; ++c) probs.probs[c * 4 + p] = static_cast<float>(pixel[p][c]);
  }
  const GammaPair g(2, 3);
  const auto map = dynamic_weight_map(pseudo, probs, g);
  for (std::size_t p = 0; p < 3; ++p) {
    std::vector<float> pf(pixel[p].begin(), pixel[p].end());
    const auto want = dynamic_weight<float>(pseudo.labels[p], pseudo.confidences[p],
                                            std::span<const float>(pf), g);
    EXPECT_EQ(map.cases[p], want.case_tag);
    EXPECT_FLOAT_EQ(map.weights[p], want.weight);
  }
  EXPECT_EQ(map.cases[0], WeightCase::Agreement);
  EXPECT_EQ(map.cases[1], WeightCase::NegativeDisagreement);
  EXPECT_EQ(map.cases[2], WeightCase::PositiveDisagreement);
  EXPECT_EQ(map.cases[3], WeightCase::Ignored);
  EXPECT_EQ(map.weights[3], 0.0f);
}

TEST(DynamicWeightMapTest, AllIgnoredAndShapeMismatch) {
  PseudoLabelMap pseudo;
  pseudo.height = 1;
  pseudo.width = 2;
  pseudo.labels = {kIgnored, kIgnored};
  pseudo.confidences = {0.9f, 0.9f};
  ProbabilityMap probs{2, 1, 2, {0.5f, 0.5f, 0.5f, 0.5f}};
  const auto map = dynamic_weight_map(pseudo, probs, GammaPair(1, 1));
  EXPECT_EQ(map.weights, std::vector<float>(2, 0.0f));
  ProbabilityMap wrong{2, 2, 1, {0.5f, 0.5f, 0.5f, 0.5f}};
  EXPECT_THROW(dynamic_weight_map(pseudo, wrong, GammaPair(1, 1)), ValidationError);
}

TEST(LossTest, WorkedExamples) {
  const std::vector<UnlabeledEntry> u{{0, 0.9, ProbabilityVector({0.7, 0.3})}};
  EXPECT_NEAR(unlabeled_loss(u, GammaPair(1, 1), 1), 0.7 * -std::log(0.7), 1e-12);
  EXPECT_NEAR(unlabeled_loss(u, GammaPair(1, 1), 1), 0.24967, 1e-5);

  const std::vector<LabeledEntry> l{{1, ProbabilityVector({0.1, 0.9})}};
  EXPECT_NEAR(labeled_loss(l, 1), 0.10536, 1e-5);
  EXPECT_EQ(labeled_loss({}, 4), 0.0);

  const auto both = combined_loss(l, u, GammaPair(1, 1), 2);
  EXPECT_NEAR(both.combined, (0.24967 + 0.10536) / 2, 1e-5);
  EXPECT_NEAR(both.combined, both.labeled_loss + both.unlabeled_loss, 1e-12);
  EXPECT_THROW(combined_loss(l, u, GammaPair(1, 1), 3), ValidationError);
  EXPECT_THROW(unlabeled_loss(u, GammaPair(1, 1), 0), ValidationError);
  EXPECT_THROW(labeled_loss(std::vector<LabeledEntry>{{2, ProbabilityVector({0.5, 0.5})}}, 1),
               IndexError);
}

TEST(LossTest, ZeroGammaIsPlainCrossEntropyOverKeptSamples) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<UnlabeledEntry> batch;
    double expected = 0;
    for (int i = 0; i < 8; ++i) {
      const auto p = RandomSimplex(rng, 3);
      const int y = static_cast<int>(rng() % 3);
      const double c = unit(rng);
      const auto truth = OracleWeight(y, c, p, 0, 0);
      if (truth.case_tag != WeightCase::PositiveDisagreement) expected += -std::log(p[y]);
      batch.push_back({y, c, ProbabilityVector(p)});
    }
    EXPECT_NEAR(unlabeled_loss(batch, GammaPair(0, 0), 8), expected / 8, 1e-12);
  }
}

LogitBatch GradientFixture() {
  // Every unlabeled row sits well inside one case so finite differences
  // do not cross a case boundary.
  LogitBatch b;
  b.num_classes = 3;
  b.labels = {2, 0};
  b.labeled_logits = {0.1, -0.4, 0.8, 1.2, 0.3, -0.5};
  b.pseudo_labels = {0, 1};
  b.pseudo_confidences = {0.9, 0.95};
  b.unlabeled_logits = {1.5, 0.2, -0.3,   // agreement
                        1.0, 0.1, -0.2};  // negative disagreement
  return b;
}

std::vector<double>& Row(LogitBatch& b, std::size_t i) {
  return i < b.labeled_logits.size() ? b.labeled_logits : b.unlabeled_logits;
}

TEST(LossGradientTest, DetachedMatchesFiniteDifferences) {
  auto batch = GradientFixture();
  const GammaPair g(2, 3);
  const auto grad = combined_loss_gradient(batch, g, WeightGradient::Detached);
  const std::vector<double> frozen = grad.weights;
  const std::size_t nl = batch.labeled_logits.size();
  std::vector<double> analytic = grad.labeled_grad;
  analytic.insert(analytic.end(), grad.unlabeled_grad.begin(), grad.unlabeled_grad.end());
  const double h = 1e-6;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    auto& v = Row(batch, i);
    const std::size_t j = i < nl ? i : i - nl;
    const double saved = v[j];
    v[j] = saved + h;
    const double up = combined_loss_from_logits(batch, g, frozen).combined;
    v[j] = saved - h;
    const double down = combined_loss_from_logits(batch, g, frozen).combined;
    v[j] = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_LT(std::abs(numeric - analytic[i]), 1e-4 * std::max(1.0, std::abs(numeric))) << i;
  }
}

TEST(LossGradientTest, FullMatchesFiniteDifferences) {
  auto batch = GradientFixture();
  const GammaPair g(2, 3);
  const auto grad = combined_loss_gradient(batch, g, WeightGradient::Full);
  const std::size_t nl = batch.labeled_logits.size();
  std::vector<double> analytic = grad.labeled_grad;
  analytic.insert(analytic.end(), grad.unlabeled_grad.begin(), grad.unlabeled_grad.end());
  const double h = 1e-6;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    auto& v = Row(batch, i);
    const std::size_t j = i < nl ? i : i - nl;
    const double saved = v[j];
    v[j] = saved + h;
    const double up = combined_loss_from_logits(batch, g).combined;
    v[j] = saved - h;
    const double down = combined_loss_from_logits(batch, g).combined;
    v[j] = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_LT(std::abs(numeric - analytic[i]), 1e-4 * std::max(1.0, std::abs(numeric))) << i;
  }
}

TEST(GammaScheduleTest, WorkedExamples) {
  EXPECT_NEAR(gamma_schedule(100, 100, 4), 4.0, 1e-12);
  EXPECT_NEAR(gamma_schedule(0, 100, 4), 4 * std::exp(5.0), 1e-9);
  EXPECT_NEAR(gamma_schedule(0, 100, 4), 593.65, 1e-2);
  EXPECT_NEAR(gamma_schedule(50, 100, 1), 3.4903, 1e-4);
  EXPECT_NEAR(gamma_schedule(0, 100, 4, ScheduleSign::Negative), 4 * std::exp(-5.0), 1e-12);
}

TEST(GammaScheduleTest, StrictlyDecreasingAndClamped) {
  double prev = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= 1000; ++t) {
    const double g = gamma_schedule(t, 1000, 2.5);
    EXPECT_LT(g, prev);
    prev = g;
  }
  EXPECT_NEAR(gamma_schedule(1500, 1000, 2.5), 2.5, 1e-12);
  EXPECT_THROW(gamma_schedule(-1, 10, 1), ValidationError);
  EXPECT_THROW(gamma_schedule(1, 0, 1), ValidationError);
}

MixupBatch TwoRowBatch() {
  MixupBatch b;
  b.rows = 2;
  b.input_dim = 2;
  b.num_classes = 2;
  b.inputs = {1, 2, 3, 4};
  b.targets = {1, 0, 0, 1};
  b.weights = {1.0f, 0.0f};
  return b;
}

TEST(MixupTest, Identities) {
  const auto b = TwoRowBatch();
  const std::vector<std::size_t> swap{1, 0};
  const auto same = mixup_batch(b, swap, 1.0);
  EXPECT_EQ(same.inputs, b.inputs);
  EXPECT_EQ(same.weights, b.weights);
  const auto partner = mixup_batch(b, swap, 0.0);
  EXPECT_EQ(partner.inputs, (std::vector<float>{3, 4, 1, 2}));
  EXPECT_EQ(partner.targets, (std::vector<float>{0, 1, 1, 0}));
  const auto mid = mixup_batch(b, swap, 0.5);
  EXPECT_FLOAT_EQ(mid.weights[0], 0.5f);
  EXPECT_FLOAT_EQ(mid.inputs[0], 2.0f);
  EXPECT_THROW(mixup_batch(b, swap, 1.5), ValidationError);
}

TEST(MixupTest, LambdaInUnitInterval) {
  std::mt19937_64 rng(1);
  double sum = 0;
  for (int i = 0; i < 4000; ++i) {
    const double l = draw_mixup_lambda(rng, 1.0);
    ASSERT_GE(l, 0.0);
    ASSERT_LE(l, 1.0);
    sum += l;
  }
  EXPECT_NEAR(sum / 4000, 0.5, 0.03);
}

TEST(RationalTest, ParseAndFormat) {
  EXPECT_EQ(Rational::parse("1/8"), (Rational{1, 8}));
  EXPECT_DOUBLE_EQ(Rational::parse("1/8").value(), 0.125);
  EXPECT_EQ(Rational::parse("1").to_string(), "1");
  EXPECT_THROW(Rational::parse("1/0"), ValidationError);
  EXPECT_THROW(Rational::parse("a/b"), ValidationError);
}

}  // namespace
}  // namespace dmt
