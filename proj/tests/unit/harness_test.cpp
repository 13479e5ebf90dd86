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
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dmt/core/error.hpp"
#include "dmt/harness/data.hpp"
#include "dmt/harness/plot.hpp"
#include "dmt/harness/presets.hpp"

namespace dmt::harness {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dmt_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(TwoMoonsTest, NoiselessPointsLieOnTheArcs) {
  const auto d = generate_two_moons(501, 0.0, 3);
  ASSERT_EQ(d.size(), 501u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = d.inputs[2 * i], y = d.inputs[2 * i + 1];
    const double cx = d.labels[i] == 0 ? 0.0 : 1.0;
    const double cy = d.labels[i] == 0 ? 0.0 : 0.5;
    EXPECT_NEAR(std::hypot(x - cx, y - cy), 1.0, 1e-6);
    if (d.labels[i] == 0) {
      EXPECT_GE(y, -1e-6);
    } else {
      EXPECT_LE(y, 0.5 + 1e-6);
    }
  }
}

TEST(TwoMoonsTest, BalancedAndDeterministic) {
  for (std::size_t n : {2u, 3u, 100u, 1001u}) {
    const auto d = generate_two_moons(n, 0.1, 9);
    const auto ones = std::count(d.labels.begin(), d.labels.end(), 1);
    EXPECT_LE(std::abs(static_cast<long>(n) - 2 * ones), 1);
  }
  const auto a = generate_two_moons(300, 0.2, 4), b = generate_two_moons(300, 0.2, 4);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(generate_two_moons(300, 0.2, 5).inputs, a.inputs);
  EXPECT_THROW(generate_two_moons(1, 0.1, 1), ValidationError);
}

TEST(ToySegmentationTest, SingleShapeMaskMatchesArea) {
  const auto toy = generate_toy_segmentation(30, 32, 4, 7, 1);
  for (std::size_t i = 0; i < 30; ++i) {
    ASSERT_EQ(toy.shapes[i].size(), 1u);
    const auto& s = toy.shapes[i][0];
    const auto& m = toy.data.masks[i];
    EXPECT_EQ(static_cast<std::size_t>(std::count(m.begin(), m.end(), s.label)), s.area(32));
    EXPECT_EQ(std::count(m.begin(), m.end(), kIgnored), 0);
    EXPECT_GE(s.label, 1);
    EXPECT_LT(s.label, 4);
  }
}

TEST(ToySegmentationTest, BinaryAndDeterministic) {
  const auto toy = generate_toy_segmentation(10, 16, 2, 1, 3);
  for (const auto& m : toy.data.masks) {
    for (auto v : m) EXPECT_TRUE(v == 0 || v == 1);
  }
  const auto again = generate_toy_segmentation(10, 16, 2, 1, 3);
  EXPECT_EQ(toy.data.inputs, again.data.inputs);
  EXPECT_EQ(toy.data.masks, again.data.masks);
  EXPECT_NO_THROW(toy.data.validate());
  EXPECT_THROW(generate_toy_segmentation(10, 16, 1, 1), ValidationError);
  // Tiny grids fall back to smaller shapes.
  EXPECT_NO_THROW(generate_toy_segmentation(5, 2, 3, 1));
}

CifarArchive RandomArchive(std::size_t per_file, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CifarArchive a;
  auto fill = [&](CifarSplit& s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      s.labels.push_back(static_cast<std::uint8_t>(rng() % 10));
      for (std::size_t b = 0; b < kCifarImageBytes; ++b) s.images.push_back(static_cast<std::uint8_t>(rng()));
    }
  };
  fill(a.train, 5 * per_file);
  fill(a.test, per_file);
  return a;
}

TEST(CifarTest, IngestsSyntheticArchiveBitwise) {
  const auto dir = TempDir("cifar");
  const auto archive = RandomArchive(12, 1);
  write_cifar10(archive, dir / "cifar-10-batches-bin", 12);
  const auto back = ingest_cifar10(dir, 12);
  EXPECT_EQ(back.train.size(), 60u);
  EXPECT_EQ(back.test.size(), 12u);
  EXPECT_EQ(back.train.images, archive.train.images);
  EXPECT_EQ(back.train.labels, archive.train.labels);
  EXPECT_EQ(back.test.images, archive.test.images);
  const auto bytes = encode_cifar_records(back.train, 0, 12);
  const auto file = ReadFile(dir / "cifar-10-batches-bin" / "data_batch_1.bin");
  EXPECT_EQ(std::vector<std::uint8_t>(file.begin(), file.end()), bytes);
  fs::remove_all(dir);
}

TEST(CifarTest, RejectsTruncatedFileAndBadLabel) {
  const auto dir = TempDir("cifar_bad");
  auto archive = RandomArchive(4, 2);
  write_cifar10(archive, dir, 4);
  fs::resize_file(dir / "data_batch_3.bin", 4 * kCifarRecordBytes - 100);
  try {
    ingest_cifar10(dir, 4);
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("data_batch_3.bin"), std::string::npos);
  }
  archive.test.labels[1] = 10;
  write_cifar10(archive, dir, 4);
  try {
    ingest_cifar10(dir, 4);
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("test_batch.bin"), std::string::npos);
  }
  EXPECT_THROW(ingest_cifar10(dir / "missing", 4), IngestionError);
  fs::remove_all(dir);
}

TEST(CifarTest, DatasetNormalizesPerChannel) {
  const auto archive = RandomArchive(2, 3);
  const auto d = to_dataset(archive.train, "c", {0.5f, 0.5f, 0.5f}, {0.25f, 0.25f, 0.25f});
  EXPECT_EQ(d.size(), 10u);
  EXPECT_FLOAT_EQ(d.inputs[0], (archive.train.images[0] / 255.0f - 0.5f) / 0.25f);
  EXPECT_NO_THROW(d.validate());
}

TEST(PresetTest, ShippedPresetsCarryReferenceHyperparameters) {
  const auto voc = load_config("voc-1_8");
  EXPECT_EQ(voc.gamma1, 5.0);
  EXPECT_EQ(voc.gamma2, 5.0);
  EXPECT_EQ(voc.batch_ratio, (std::pair<std::size_t, std::size_t>{7, 1}));
  EXPECT_EQ(voc.learning_rate, 1e-3);
  EXPECT_EQ(voc.training_mode, train::TrainingMode::FineTune);
  EXPECT_EQ(voc.batch_size, 8u);
  const auto cifar = load_config("cifar10-4k");
  EXPECT_EQ(cifar.gamma1, 4.0);
  EXPECT_EQ(cifar.batch_ratio, (std::pair<std::size_t, std::size_t>{7, 1}));
  EXPECT_EQ(cifar.batch_size, 512u);
  EXPECT_EQ(cifar.training_mode, train::TrainingMode::ReTrain);
  EXPECT_EQ(load_config("cifar10-1k").batch_ratio, (std::pair<std::size_t, std::size_t>{31, 1}));
  const auto city = load_config("cityscapes-1_8");
  EXPECT_EQ(city.gamma1, 3.0);
  EXPECT_EQ(city.learning_rate, 4e-3);
  EXPECT_EQ(city.batch_ratio, (std::pair<std::size_t, std::size_t>{3, 1}));
}

TEST(PresetTest, EmbeddedTextMatchesShippedFiles) {
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(DMT_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    ++files;
    EXPECT_EQ(preset_text(entry.path().stem().string()), ReadFile(entry.path()));
    EXPECT_NO_THROW(load_config(entry.path().string()));
  }
  EXPECT_EQ(files, preset_names().size());
  EXPECT_GE(files, 10u);
}

TEST(PresetTest, LoadConfigRejectsBadFiles) {
  const auto dir = TempDir("config");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  EXPECT_THROW(load_config(write("neg.cfg", "dataset = moons\ngamma1 = -1\n")), ConfigError);
  EXPECT_THROW(load_config(write("unknown.cfg", "dataset = moons\nfoo = 1\n")), ConfigError);
  EXPECT_THROW(load_config(write("missing.cfg", "gamma1 = 1\n")), ConfigError);
  EXPECT_THROW(load_config("no-such-preset"), ConfigError);
  EXPECT_EQ(load_config(write("ok.cfg", "dataset = moons\n")).dataset, "moons");
  const auto c = with_overrides(load_config("moons"), {"gamma1=2", " seed = 7 "});
  EXPECT_EQ(c.gamma1, 2.0);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_THROW(with_overrides(c, {"gamma1"}), ConfigError);
  EXPECT_THROW(with_overrides(c, {"gamma1=-3"}), ConfigError);
  fs::remove_all(dir);
}

TEST(DataTest, LoadDataBuildsBundles) {
  auto c = load_config("moons");
  const auto moons = load_data(c, {});
  EXPECT_EQ(moons.train.size(), 1000u);
  EXPECT_EQ(moons.test.size(), 1000u);
  EXPECT_NE(moons.train.inputs, moons.test.inputs);
  c.dataset = "voc";
  EXPECT_THROW(load_data(c, {}), ConfigError);
  EXPECT_THROW(load_data(load_config("cifar10-4k"), TempDir("nodata")), IngestionError);
}

TEST(PlotTest, WritesSvgAndPng) {
  const auto dir = TempDir("plot");
  write_bar_chart(dir / "bars.svg", "Error <by> quantile", "error", {{"20%", 0.1}, {"100%", 0.3}});
  write_line_chart(dir / "lines.svg", "Accuracy", "iteration", "accuracy",
                   {{"A", {0, 1, 2}, {0.5, 0.6, 0.7}}, {"B", {0, 1, 2}, {0.4, 0.6, 0.8}}});
  write_heatmap_png(dir / "w.png", {0.0f, 0.5f, 1.0f, 0.25f}, 2, 2, 3);
  EXPECT_EQ(ReadFile(dir / "bars.svg").rfind("<svg", 0), 0u);
  EXPECT_NE(ReadFile(dir / "bars.svg").find("&lt;by&gt;"), std::string::npos);
  EXPECT_NE(ReadFile(dir / "lines.svg").find("polyline"), std::string::npos);
  const auto png = ReadFile(dir / "w.png");
  ASSERT_GE(png.size(), 8u);
  EXPECT_EQ(png.substr(1, 3), "PNG");
  EXPECT_THROW(write_heatmap_png(dir / "x.png", {0.0f}, 2, 2), ValidationError);
  EXPECT_THROW(write_line_chart(dir / "y.svg", "t", "x", "y", {{"A", {0, 1}, {0.5}}}), ValidationError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace dmt::harness
