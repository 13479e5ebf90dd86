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

#include "dmt/harness/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "dmt/core/error.hpp"
#include "dmt/core/random.hpp"

namespace dmt::harness {

namespace fs = std::filesystem;

train::Dataset generate_two_moons(std::size_t n, double noise_std, std::uint64_t seed) {
  if (n < 2) throw ValidationError(fmt::format("two moons needs n >= 2, got {}", n));
  if (!(noise_std >= 0.0)) throw ValidationError("two moons noise must be >= 0");
  auto rng = make_rng(seed, {1});
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  train::Dataset d;
  d.name = "moons";
  d.task = train::Task::Classification;
  d.num_classes = 2;
  d.sample_shape = {2};
  d.inputs.resize(2 * n);
  d.labels.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    const ClassIndex label = static_cast<ClassIndex>(k % 2);
    const double t = angle(rng);
    double x = label == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double y = label == 0 ? std::sin(t) : 0.5 - std::sin(t);
    if (noise_std > 0.0) {
      x += noise(rng);
      y += noise(rng);
    }
    d.inputs[2 * i] = static_cast<float>(x);
    d.inputs[2 * i + 1] = static_cast<float>(y);
    d.labels[i] = label;
  }
  return d;
}

bool Shape::covers(std::size_t y, std::size_t x) const {
  if (kind == ShapeKind::Rectangle) {
    return y >= top && y < top + height && x >= left && x < left + width;
  }
  const double dy = static_cast<double>(y) + 0.5 - cy;
  const double dx = static_cast<double>(x) + 0.5 - cx;
  return dy * dy + dx * dx <= radius * radius;
}

std::size_t Shape::area(std::size_t grid) const {
  std::size_t a = 0;
  for (std::size_t y = 0; y < grid; ++y) {
    for (std::size_t x = 0; x < grid; ++x) a += covers(y, x) ? 1 : 0;
  }
  return a;
}

namespace {

// Well separated base colors; class 0 is the background.
constexpr float kPalette[][3] = {{0.1f, 0.1f, 0.1f}, {0.9f, 0.2f, 0.2f}, {0.2f, 0.8f, 0.2f},
                                 {0.2f, 0.3f, 0.9f}, {0.9f, 0.9f, 0.2f}, {0.8f, 0.3f, 0.8f},
                                 {0.2f, 0.8f, 0.8f}, {0.9f, 0.6f, 0.2f}};
constexpr std::size_t kPaletteSize = std::size(kPalette);

float channel_color(std::size_t label, std::size_t channel) {
  if (label < kPaletteSize) return kPalette[label][channel];
  // Deterministic fallback for large class counts.
  return static_cast<float>(((label * 37 + channel * 91) % 97) / 96.0);
}

Shape place_shape(std::size_t grid, std::uint8_t label, std::mt19937_64& rng) {
  std::size_t max_side = grid / 2;
  std::size_t min_side = std::max<std::size_t>(grid / 8, 2);
  if (min_side > max_side) min_side = max_side;
  // Retry with smaller shapes until one fits inside the grid.
  while (max_side >= 1) {
    std::uniform_int_distribution<std::size_t> side(min_side, max_side);
    Shape s;
    s.label = label;
    s.kind = std::bernoulli_distribution(0.5)(rng) ? ShapeKind::Rectangle : ShapeKind::Disc;
    if (s.kind == ShapeKind::Rectangle) {
      s.height = side(rng);
      s.width = side(rng);
      if (s.height <= grid && s.width <= grid) {
        s.top = std::uniform_int_distribution<std::size_t>(0, grid - s.height)(rng);
        s.left = std::uniform_int_distribution<std::size_t>(0, grid - s.width)(rng);
        return s;
      }
    } else {
      const std::size_t d = side(rng);
      if (d <= grid) {
        s.radius = static_cast<double>(d) / 2.0;
        s.cy = static_cast<double>(std::uniform_int_distribution<std::size_t>(0, grid - d)(rng)) + s.radius;
        s.cx = static_cast<double>(std::uniform_int_distribution<std::size_t>(0, grid - d)(rng)) + s.radius;
        if (s.area(grid) > 0) return s;
      }
    }
    max_side /= 2;
    min_side = std::min(min_side, max_side);
  }
  throw ValidationError(fmt::format("no shape fits a {}x{} grid", grid, grid));
}

}  // namespace

ToySegmentation generate_toy_segmentation(std::size_t n, std::size_t grid, std::size_t num_classes,
                                          std::uint64_t seed, std::size_t shapes_per_image) {
  if (num_classes < 2) throw ValidationError("toy segmentation needs at least 2 classes");
  if (num_classes > 255) throw ValidationError("toy segmentation supports at most 255 classes");
  if (grid < 1) throw ValidationError("toy segmentation grid must be positive");
  if (n < 1) throw ValidationError("toy segmentation needs n >= 1");
  ToySegmentation out;
  auto& d = out.data;
  d.name = "toy-seg";
  d.task = train::Task::Segmentation;
  d.num_classes = num_classes;
  d.sample_shape = {3, grid, grid};
  const std::size_t pixels = grid * grid;
  d.inputs.assign(n * 3 * pixels, 0.0f);
  d.masks.assign(n, std::vector<std::uint8_t>(pixels, 0));
  out.shapes.resize(n);
  std::normal_distribution<float> jitter(0.0f, 0.08f);
  std::uniform_int_distribution<std::size_t> pick(1, num_classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_rng(seed, {2, i});
    auto& mask = d.masks[i];
    for (std::size_t s = 0; s < shapes_per_image; ++s) {
      const auto shape = place_shape(grid, static_cast<std::uint8_t>(pick(rng)), rng);
      for (std::size_t y = 0; y < grid; ++y) {
        for (std::size_t x = 0; x < grid; ++x) {
          if (shape.covers(y, x)) mask[y * grid + x] = shape.label;
        }
      }
      out.shapes[i].push_back(shape);
    }
    float* image = d.inputs.data() + i * 3 * pixels;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < pixels; ++p) {
        image[c * pixels + p] = channel_color(mask[p], c) + jitter(rng);
      }
    }
  }
  return out;
}

namespace {

fs::path cifar_root(const fs::path& directory) {
  const auto nested = directory / "cifar-10-batches-bin";
  return fs::is_directory(nested) ? nested : directory;
}

void read_batch(const fs::path& file, std::size_t records, CifarSplit& into) {
  if (!fs::exists(file)) throw IngestionError(fmt::format("{}: missing", file.string()));
  const auto expected = records * kCifarRecordBytes;
  const auto actual = fs::file_size(file);
  if (actual != expected) {
    throw IngestionError(fmt::format("{}: size {} bytes, expected {}", file.string(), actual, expected));
  }
  std::ifstream in(file, std::ios::binary);
  std::vector<std::uint8_t> bytes(expected);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected))) {
    throw IngestionError(fmt::format("{}: read failed", file.string()));
  }
  for (std::size_t r = 0; r < records; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] > 9) {
      throw IngestionError(fmt::format("{}: record {} has label {}", file.string(), r, rec[0]));
    }
    into.labels.push_back(rec[0]);
    into.images.insert(into.images.end(), rec + 1, rec + kCifarRecordBytes);
  }
}

std::vector<std::string> train_files() {
  std::vector<std::string> names;
  for (int b = 1; b <= 5; ++b) names.push_back(fmt::format("data_batch_{}.bin", b));
  return names;
}

}  // namespace

CifarArchive ingest_cifar10(const fs::path& directory, std::size_t records_per_file) {
  const auto root = cifar_root(directory);
  CifarArchive archive;
  for (const auto& name : train_files()) read_batch(root / name, records_per_file, archive.train);
  read_batch(root / "test_batch.bin", records_per_file, archive.test);
  if (archive.train.size() != 5 * records_per_file || archive.test.size() != records_per_file) {
    throw IngestionError(fmt::format("{}: record counts {}/{}", root.string(), archive.train.size(),
                                     archive.test.size()));
  }
  return archive;
}

std::vector<std::uint8_t> encode_cifar_records(const CifarSplit& split, std::size_t first,
                                               std::size_t count) {
  if (first + count > split.size()) throw IndexError("cifar record range out of bounds");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(count * kCifarRecordBytes);
  for (std::size_t r = first; r < first + count; ++r) {
    bytes.push_back(split.labels[r]);
    const auto* img = split.images.data() + r * kCifarImageBytes;
    bytes.insert(bytes.end(), img, img + kCifarImageBytes);
  }
  return bytes;
}

void write_cifar10(const CifarArchive& archive, const fs::path& directory, std::size_t records_per_file) {
  fs::create_directories(directory);
  auto write = [](const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  };
  const auto names = train_files();
  for (std::size_t b = 0; b < names.size(); ++b) {
    write(directory / names[b], encode_cifar_records(archive.train, b * records_per_file, records_per_file));
  }
  write(directory / "test_batch.bin", encode_cifar_records(archive.test, 0, records_per_file));
}

train::Dataset to_dataset(const CifarSplit& split, const std::string& name, const std::vector<float>& mean,
                          const std::vector<float>& stddev) {
  train::Dataset d;
  d.name = name;
  d.task = train::Task::Classification;
  d.num_classes = 10;
  d.sample_shape = {3, kCifarSide, kCifarSide};
  const std::size_t plane = kCifarSide * kCifarSide;
  d.inputs.resize(split.images.size());
  for (std::size_t i = 0; i < split.images.size(); ++i) {
    const std::size_t c = (i / plane) % 3;
    d.inputs[i] = (static_cast<float>(split.images[i]) / 255.0f - mean[c]) / stddev[c];
  }
  d.labels.assign(split.labels.begin(), split.labels.end());
  return d;
}

train::DataBundle load_data(const train::ExperimentConfig& c, const fs::path& data_dir) {
  train::DataBundle bundle;
  if (c.dataset == "moons") {
    bundle.train = generate_two_moons(c.dataset_size, c.moons_noise, derive_seed(c.seed, {21}));
    bundle.test = generate_two_moons(c.test_size, c.moons_noise, derive_seed(c.seed, {22}));
  } else if (c.dataset == "toy-seg") {
    bundle.train = generate_toy_segmentation(c.dataset_size, c.grid_size, c.num_classes,
                                             derive_seed(c.seed, {23}), c.shapes_per_image).data;
    bundle.test = generate_toy_segmentation(c.test_size, c.grid_size, c.num_classes,
                                            derive_seed(c.seed, {24}), c.shapes_per_image).data;
  } else if (c.dataset == "cifar10") {
    const auto archive = ingest_cifar10(data_dir);
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    const std::size_t plane = kCifarSide * kCifarSide;
    for (std::size_t i = 0; i < archive.train.images.size(); ++i) {
      const double v = archive.train.images[i] / 255.0;
      sum[(i / plane) % 3] += v;
      sq[(i / plane) % 3] += v * v;
    }
    const double count = static_cast<double>(archive.train.size() * plane);
    std::vector<float> mean(3), stddev(3);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      mean[ch] = static_cast<float>(sum[ch] / count);
      stddev[ch] = static_cast<float>(std::sqrt(std::max(sq[ch] / count - (sum[ch] / count) * (sum[ch] / count), 1e-12)));
    }
    bundle.train = to_dataset(archive.train, "cifar10", mean, stddev);
    bundle.test = to_dataset(archive.test, "cifar10-test", mean, stddev);
  } else {
    throw ConfigError(fmt::format("dataset: '{}' has no loader (use moons, toy-seg or cifar10)", c.dataset));
  }
  bundle.train.validate();
  bundle.test.validate();
  return bundle;
}

fs::path resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DMT_DATA_DIR"); env && *env) return env;
  return "data";
}

}  // namespace dmt::harness
