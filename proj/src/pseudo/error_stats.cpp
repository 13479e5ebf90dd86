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

#include "dmt/pseudo/error_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "dmt/core/error.hpp"

namespace dmt::pseudo {

namespace {

struct Audited {
  float confidence;
  bool correct;
};

ErrorReport report_from(const std::vector<Audited>& audited, std::span<const double> quantiles) {
  ErrorReport report;
  report.total = audited.size();
  for (const auto& a : audited) report.errors += a.correct ? 0 : 1;
  report.overall_error =
      report.total == 0 ? 0.0 : static_cast<double>(report.errors) / static_cast<double>(report.total);

  std::vector<std::size_t> order(audited.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return audited[a].confidence > audited[b].confidence;
  });
  // prefix[k] = errors among the k most confident labels
  std::vector<std::size_t> prefix(order.size() + 1, 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    prefix[r + 1] = prefix[r] + (audited[order[r]].correct ? 0 : 1);
  }
  for (double q : quantiles) {
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError(fmt::format("quantile {} outside (0, 1]", q));
    QuantileError row;
    row.fraction = q;
    row.count = static_cast<std::size_t>(std::floor(q * static_cast<double>(order.size()) + 1e-9));
    row.errors = prefix[row.count];
    row.error_rate =
        row.count == 0 ? 0.0 : static_cast<double>(row.errors) / static_cast<double>(row.count);
    report.quantiles.push_back(row);
  }
  return report;
}

}  // namespace

ErrorReport pseudo_label_error_stats(std::span<const PseudoLabelRecord> records,
                                     const std::map<std::string, ClassIndex>& ground_truth,
                                     std::span<const double> quantiles) {
  std::vector<Audited> audited;
  audited.reserve(records.size());
  for (const auto& r : records) {
    if (r.ignored()) continue;
    const auto it = ground_truth.find(r.sample_id);
    if (it == ground_truth.end()) {
      throw ValidationError(fmt::format("no ground truth for sample '{}'", r.sample_id));
    }
    audited.push_back({static_cast<float>(r.confidence), it->second == r.label});
  }
  return report_from(audited, quantiles);
}

ErrorReport pseudo_label_error_stats(std::span<const PseudoLabelMap> maps,
                                     std::span<const std::vector<std::uint8_t>> ground_truth,
                                     std::span<const double> quantiles) {
  if (maps.size() != ground_truth.size()) {
    throw ValidationError(fmt::format("{} pseudo-label maps but {} ground-truth masks", maps.size(),
                                      ground_truth.size()));
  }
  std::vector<Audited> audited;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const auto& map = maps[m];
    if (ground_truth[m].size() != map.pixels()) {
      throw ValidationError(fmt::format("ground truth for '{}' has the wrong size", map.sample_id));
    }
    for (std::size_t p = 0; p < map.pixels(); ++p) {
      if (map.ignored(p) || ground_truth[m][p] == kIgnored) continue;
      audited.push_back({map.confidences[p], map.labels[p] == ground_truth[m][p]});
    }
  }
  return report_from(audited, quantiles);
}

}  // namespace dmt::pseudo
