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

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dmt/core/error.hpp"
#include "dmt/pseudo/error_stats.hpp"
#include "dmt/pseudo/selection.hpp"
#include "dmt/pseudo/serialization.hpp"

namespace dmt::pseudo {
namespace {

namespace fs = std::filesystem;

std::vector<double> RandomSimplex(std::mt19937_64& rng, std::size_t k) {
  std::gamma_distribution<double> g(0.5, 1.0);
  std::vector<double> p(k);
  double sum = 0;
  for (auto& v : p) sum += (v = g(rng) + 1e-6);
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<KeyedPrediction> Binary(const std::vector<double>& top) {
  std::vector<KeyedPrediction> out;
  for (std::size_t i = 0; i < top.size(); ++i) {
    out.push_back({std::to_string(i), ProbabilityVector({top[i], 1 - top[i]})});
  }
  return out;
}

KeyedProbabilityMap RandomMap(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w,
                              const std::string& id) {
  KeyedProbabilityMap m{id, ProbabilityMap{c, h, w, std::vector<float>(c * h * w)}};
  for (std::size_t p = 0; p < h * w; ++p) {
    const auto v = RandomSimplex(rng, c);
    for (std::size_t k = 0; k < c; ++k) m.map.probs[k * h * w + p] = static_cast<float>(v[k]);
  }
  return m;
}

fs::path TempDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dmt_pseudo_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(SelectionPolicyTest, ValidatesParameterRange) {
  EXPECT_THROW(SelectionPolicy(SelectionPolicy::Kind::TopFraction, 0.0), ValidationError);
  EXPECT_THROW(SelectionPolicy(SelectionPolicy::Kind::TopFraction, 1.5), ValidationError);
  EXPECT_THROW(SelectionPolicy(SelectionPolicy::Kind::FixedThreshold, 1.0), ValidationError);
  EXPECT_NO_THROW(SelectionPolicy(SelectionPolicy::Kind::FixedThreshold, 0.0));
  EXPECT_EQ(parse_selection_kind("cbst"), SelectionPolicy::Kind::CBSTRenormalized);
  EXPECT_THROW(parse_selection_kind("nope"), ConfigError);
}

TEST(ThresholdTest, StrictInequality) {
  const auto out = threshold_pseudo_labels(Binary({0.95, 0.85, 0.9}), 0.9);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].label, 0);
  EXPECT_TRUE(out[1].ignored());
  EXPECT_TRUE(out[2].ignored());
  EXPECT_DOUBLE_EQ(out[1].confidence, 0.85);
}

TEST(TopFractionTest, WorkedExamples) {
  std::vector<double> conf{0.55, 0.91, 0.62, 0.77, 0.99, 0.58, 0.83, 0.71, 0.66, 0.95};
  EXPECT_EQ(top_fraction_select(Binary(conf), 1.0).size(), 10u);
  EXPECT_TRUE(top_fraction_select(Binary({0.9, 0.8, 0.7}), 0.2).empty());
  EXPECT_TRUE(top_fraction_select({}, 0.5).empty());

  const auto out = top_fraction_select(Binary(conf), 0.2);
  std::vector<std::size_t> order(conf.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return conf[a] > conf[b]; });
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].sample_id, std::to_string(order[0]));
  EXPECT_EQ(out[1].sample_id, std::to_string(order[1]));
}

TEST(TopFractionTest, NestedAcrossFractions) {
  std::mt19937_64 rng(5);
  std::vector<KeyedPrediction> preds;
  for (int i = 0; i < 200; ++i) preds.push_back({std::to_string(i), ProbabilityVector(RandomSimplex(rng, 4))});
  std::set<std::string> full;
  for (const auto& r : top_fraction_select(preds, 1.0)) full.insert(r.sample_id);
  std::set<std::string> previous;
  for (double a : {0.1, 0.3, 0.5, 0.9}) {
    std::set<std::string> cur;
    for (const auto& r : top_fraction_select(preds, a)) {
      cur.insert(r.sample_id);
      EXPECT_TRUE(full.count(r.sample_id));
    }
    EXPECT_TRUE(std::includes(cur.begin(), cur.end(), previous.begin(), previous.end()));
    previous = cur;
  }
}

// Per-class full-sort oracle over all pixels of all maps.
std::vector<std::vector<std::uint8_t>> ClassBalancedOracle(const std::vector<KeyedProbabilityMap>& maps,
                                                           double alpha) {
  struct Px { double conf; std::size_t map, pixel; };
  const std::size_t c = maps[0].map.num_classes;
  std::vector<std::vector<Px>> per_class(c);
  std::vector<std::vector<std::uint8_t>> out;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const auto& pm = maps[m].map;
    out.emplace_back(pm.pixels(), 255);
    for (std::size_t p = 0; p < pm.pixels(); ++p) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < c; ++k) if (pm.at(k, p) > pm.at(best, p)) best = k;
      per_class[best].push_back({pm.at(best, p), m, p});
    }
  }
  for (std::size_t k = 0; k < c; ++k) {
    auto& v = per_class[k];
    std::stable_sort(v.begin(), v.end(), [](const Px& a, const Px& b) { return a.conf > b.conf; });
    const auto take = static_cast<std::size_t>(std::floor(alpha * v.size() + 1e-9));
    for (std::size_t i = 0; i < take; ++i) out[v[i].map][v[i].pixel] = static_cast<std::uint8_t>(k);
  }
  return out;
}

TEST(ClassBalancedTest, MatchesPerClassSortOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<KeyedProbabilityMap> maps;
    for (int m = 0; m < 3; ++m) maps.push_back(RandomMap(rng, 3, 16, 16, std::to_string(m)));
    for (double alpha : {0.1, 0.35, 0.5, 1.0}) {
      const auto got = class_balanced_select(maps, alpha);
      const auto want = ClassBalancedOracle(maps, alpha);
      for (std::size_t m = 0; m < maps.size(); ++m) ASSERT_EQ(got[m].labels, want[m]);
    }
  }
}

TEST(ClassBalancedTest, FloorPerClass) {
  // 8 pixels predicted class 0 and 2 predicted class 1.
  KeyedProbabilityMap m{"img", ProbabilityMap{2, 1, 10, std::vector<float>(20)}};
  for (std::size_t p = 0; p < 10; ++p) {
    const float top = 0.55f + 0.04f * static_cast<float>(p);
    const bool class1 = p >= 8;
    m.map.probs[p] = class1 ? 1 - top : top;
    m.map.probs[10 + p] = class1 ? top : 1 - top;
  }
  const auto out = class_balanced_select(std::vector{m}, 0.5);
  EXPECT_EQ(std::count(out[0].labels.begin(), out[0].labels.end(), 0), 4);
  EXPECT_EQ(std::count(out[0].labels.begin(), out[0].labels.end(), 1), 1);
  // The 4 most confident class-0 pixels are the last 4 of that class.
  for (std::size_t p = 4; p < 8; ++p) EXPECT_EQ(out[0].labels[p], 0);
  EXPECT_EQ(out[0].labels[9], 1);

  const auto all = class_balanced_select(std::vector{m}, 1.0);
  EXPECT_EQ(std::count(all[0].labels.begin(), all[0].labels.end(), 255), 0);
}

TEST(CbstTest, RenormalizationFlipsClass) {
  const std::vector<double> probs{0.6, 0.4};
  const std::vector<double> thresholds{0.61, 0.39};
  const auto r = cbst_renormalize(probs, thresholds);
  EXPECT_EQ(r.label, 1);
  EXPECT_NEAR(r.score, 0.4 / 0.39, 1e-12);
  const std::vector<double> ones{1, 1};
  EXPECT_FALSE(cbst_renormalize(probs, ones).score > 1.0);
}

TEST(CbstTest, MatchesLiteralProcedure) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<KeyedProbabilityMap> maps{RandomMap(rng, 3, 8, 8, "a"), RandomMap(rng, 3, 8, 8, "b")};
    const double alpha = 0.1 + 0.08 * trial;
    // Thresholds: confidence at rank floor(alpha * n_c) within class c.
    std::vector<std::vector<double>> conf(3);
    for (const auto& km : maps) {
      for (std::size_t p = 0; p < km.map.pixels(); ++p) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 3; ++k) if (km.map.at(k, p) > km.map.at(best, p)) best = k;
        conf[best].push_back(km.map.at(best, p));
      }
    }
    std::vector<double> th(3, 1.0);
    for (std::size_t k = 0; k < 3; ++k) {
      std::sort(conf[k].begin(), conf[k].end(), std::greater<>());
      const auto rank = static_cast<std::size_t>(std::floor(alpha * conf[k].size() + 1e-9));
      if (rank > 0) th[k] = conf[k][rank - 1];
    }
    EXPECT_EQ(cbst_class_thresholds(maps, alpha), th);
    const auto got = cbst_renormalized_select(maps, alpha);
    for (std::size_t m = 0; m < maps.size(); ++m) {
      for (std::size_t p = 0; p < 64; ++p) {
        std::size_t best = 0;
        double score = maps[m].map.at(0, p) / th[0];
        for (std::size_t k = 1; k < 3; ++k) {
          const double s = maps[m].map.at(k, p) / th[k];
          if (s > score) { score = s; best = k; }
        }
        const std::uint8_t want = score > 1.0 ? static_cast<std::uint8_t>(best) : 255;
        ASSERT_EQ(got[m].labels[p], want);
      }
    }
  }
}

TEST(SelectionTest, NeverFabricatesLabels) {
  std::mt19937_64 rng(4);
  std::vector<KeyedPrediction> preds;
  for (int i = 0; i < 100; ++i) preds.push_back({std::to_string(i), ProbabilityVector(RandomSimplex(rng, 5))});
  std::map<std::string, ClassIndex> argmax_of;
  for (const auto& p : preds) argmax_of[p.sample_id] = p.probs.argmax();
  for (auto kind : {SelectionPolicy::Kind::FixedThreshold, SelectionPolicy::Kind::TopFraction,
                    SelectionPolicy::Kind::ClassBalancedTopFraction}) {
    for (const auto& r : select(preds, SelectionPolicy(kind, 0.5))) {
      if (!r.ignored()) {
        EXPECT_EQ(r.label, argmax_of[r.sample_id]);
      }
    }
  }
}

PseudoLabelMap SmallMap() {
  PseudoLabelMap m;
  m.sample_id = "img-7";
  m.height = 1;
  m.width = 1;
  m.labels = {3};
  m.confidences = {0.5f};
  m.source_model = "A";
  m.iteration = 2;
  return m;
}

TEST(SerializationTest, MapByteLayout) {
  const auto bytes = encode_map(SmallMap());
  ASSERT_EQ(bytes.size(), 17u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DMTL");
  const std::vector<std::uint8_t> dims{1, 0, 0, 0, 1, 0, 0, 0};
  EXPECT_TRUE(std::equal(dims.begin(), dims.end(), bytes.begin() + 4));
  EXPECT_EQ(bytes[12], 3);
  const std::vector<std::uint8_t> half{0x00, 0x00, 0x00, 0x3f};
  EXPECT_TRUE(std::equal(half.begin(), half.end(), bytes.begin() + 13));
}

TEST(SerializationTest, DecodeRejectsBadInput) {
  auto bytes = encode_map(SmallMap());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_map(bad, "x.dmtl"), FormatError);
  EXPECT_THROW(decode_map(std::span(bytes).first(15), "x.dmtl"), FormatError);
  bytes.push_back(0);
  EXPECT_THROW(decode_map(bytes, "x.dmtl"), FormatError);
  try {
    decode_map(bad, "x.dmtl");
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("x.dmtl"), std::string::npos);
  }
}

TEST(SerializationTest, RecordsRoundTrip) {
  const auto dir = TempDir("records");
  std::vector<PseudoLabelRecord> recs{{"a", 1, 0.75, "B", 3}, {"b", kIgnored, 0.1, "B", 3},
                                      {"c\"q", 0, 0.123456789012345, "B", 3}};
  const auto manifest = save_pseudo_labels(recs, dir, 0.4);
  EXPECT_EQ(manifest.kind, "records");
  const auto loaded = std::get<std::vector<PseudoLabelRecord>>(load_pseudo_labels(dir));
  EXPECT_EQ(loaded, recs);
  EXPECT_DOUBLE_EQ(load_manifest(dir).alpha, 0.4);
}

TEST(SerializationTest, MapsRoundTripAndDetectCorruption) {
  const auto dir = TempDir("maps");
  std::mt19937_64 rng(8);
  std::vector<PseudoLabelMap> maps;
  for (int i = 0; i < 3; ++i) {
    PseudoLabelMap m;
    m.sample_id = "img" + std::to_string(i);
    m.height = 4;
    m.width = 5;
    m.source_model = "A";
    m.iteration = 1;
    for (int p = 0; p < 20; ++p) {
      m.labels.push_back(static_cast<std::uint8_t>(rng() % 3 == 0 ? 255 : rng() % 4));
      m.confidences.push_back(std::uniform_real_distribution<float>(0.01f, 1.0f)(rng));
    }
    maps.push_back(m);
  }
  const auto manifest = save_pseudo_labels(maps, dir, 0.6);
  ASSERT_EQ(manifest.files.size(), 3u);
  EXPECT_EQ(std::get<std::vector<PseudoLabelMap>>(load_pseudo_labels(dir)), maps);

  // Flip one byte in the last file: the whole load must fail.
  const auto victim = dir / manifest.files.back().file;
  std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(20);
  f.put('\x7f');
  f.close();
  try {
    load_pseudo_labels(dir);
    FAIL() << "corruption not detected";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(manifest.files.back().file), std::string::npos);
  }
}

TEST(SerializationTest, Sha256KnownVector) {
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ErrorStatsTest, WorkedExamples) {
  std::vector<PseudoLabelRecord> recs;
  std::map<std::string, ClassIndex> gt;
  for (int i = 0; i < 10; ++i) {
    const auto id = std::to_string(i);
    recs.push_back({id, 1, 1.0 - 0.05 * i, "A", 1});
    gt[id] = i == 9 ? 0 : 1;  // the least confident record is wrong
  }
  const auto report = pseudo_label_error_stats(recs, gt);
  EXPECT_DOUBLE_EQ(report.overall_error, 0.1);
  ASSERT_EQ(report.quantiles.size(), 4u);
  EXPECT_EQ(report.quantiles[0].count, 2u);
  EXPECT_EQ(report.quantiles[0].error_rate, 0.0);
  for (std::size_t q = 1; q < 4; ++q) {
    EXPECT_GE(report.quantiles[q].error_rate, report.quantiles[q - 1].error_rate);
  }
  gt[recs[0].sample_id] = 1;
  for (auto& [id, label] : gt) label = 1;
  const auto clean = pseudo_label_error_stats(recs, gt);
  EXPECT_EQ(clean.overall_error, 0.0);
  gt.erase("3");
  EXPECT_THROW(pseudo_label_error_stats(recs, gt), ValidationError);
}

}  // namespace
}  // namespace dmt::pseudo
