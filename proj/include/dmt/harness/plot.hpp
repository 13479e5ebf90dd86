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

#include <filesystem>
#include <string>
#include <vector>

namespace dmt::harness {

struct Bar {
  std::string label;
  double value = 0.0;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG charts.
void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& y_label, const std::vector<Bar>& bars);
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

// Grayscale PNG of values in [0, 1] (clamped), row-major height x width,
// upscaled by scale pixels per cell.
void write_heatmap_png(const std::filesystem::path& path, const std::vector<float>& values,
                       std::size_t height, std::size_t width, std::size_t scale = 4);

}  // namespace dmt::harness
