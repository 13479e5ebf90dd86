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
#include <filesystem>
#include <string>
#include <vector>

#include "dmt/train/config.hpp"
#include "dmt/train/dataset.hpp"

namespace dmt::harness {

// Two interleaving half-circles with Gaussian coordinate noise. Labels
// alternate so class counts differ by at most one; order is shuffled.
train::Dataset generate_two_moons(std::size_t n, double noise_std, std::uint64_t seed);

enum class ShapeKind : std::uint8_t { Rectangle, Disc };

struct Shape {
  ShapeKind kind = ShapeKind::Rectangle;
  std::uint8_t label = 1;
  // Rectangle: [top, top + height) x [left, left + width). Disc: center and radius.
  std::size_t top = 0, left = 0, height = 0, width = 0;
  double cy = 0.0, cx = 0.0, radius = 0.0;

  bool covers(std::size_t y, std::size_t x) const;
  // Number of grid pixels covered.
  std::size_t area(std::size_t grid) const;
};

struct ToySegmentation {
  train::Dataset data;
  std::vector<std::vector<Shape>> shapes;  // per image, in paint order
};

// Images of grid x grid pixels (3 channels) with shapes_per_image colored
// shapes of classes 1..num_classes-1 on a class-0 background. Masks are
// exact; later shapes paint over earlier ones.
ToySegmentation generate_toy_segmentation(std::size_t n, std::size_t grid, std::size_t num_classes,
                                          std::uint64_t seed, std::size_t shapes_per_image = 2);

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarImageBytes = 3 * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarImageBytes;
inline constexpr std::size_t kCifarRecordsPerFile = 10000;

// Raw CIFAR-10 records: channel-planar RGB bytes, one label byte each.
struct CifarSplit {
  std::vector<std::uint8_t> images;  // n * 3072
  std::vector<std::uint8_t> labels;  // n
  std::size_t size() const { return labels.size(); }
};

struct CifarArchive {
  CifarSplit train;  // data_batch_1..5.bin
  CifarSplit test;   // test_batch.bin
};

// Reads the five training batches and the test batch from directory (or its
// cifar-10-batches-bin subdirectory). Every file must hold exactly
// records_per_file records with labels in [0, 9]; otherwise IngestionError
// naming the file.
CifarArchive ingest_cifar10(const std::filesystem::path& directory,
                            std::size_t records_per_file = kCifarRecordsPerFile);

std::vector<std::uint8_t> encode_cifar_records(const CifarSplit& split, std::size_t first,
                                               std::size_t count);
void write_cifar10(const CifarArchive& archive, const std::filesystem::path& directory,
                   std::size_t records_per_file = kCifarRecordsPerFile);

// Converts bytes to floats normalized per channel with the training mean and std.
train::Dataset to_dataset(const CifarSplit& split, const std::string& name,
                          const std::vector<float>& mean, const std::vector<float>& stddev);

// Train and test data for the configured dataset. data_dir is consulted for
// cifar10 only.
train::DataBundle load_data(const train::ExperimentConfig& config,
                            const std::filesystem::path& data_dir);

// Resolution order for the data directory: flag, then DMT_DATA_DIR, then "data".
std::filesystem::path resolve_data_dir(const std::string& flag);

}  // namespace dmt::harness
