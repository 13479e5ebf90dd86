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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "dmt/core/error.hpp"
#include "dmt/core/loss.hpp"
#include "dmt/harness/data.hpp"
#include "dmt/harness/plot.hpp"
#include "dmt/harness/presets.hpp"
#include "dmt/pseudo/error_stats.hpp"
#include "dmt/pseudo/serialization.hpp"
#include "dmt/train/runner.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dmt;

namespace {

constexpr int kUsageExit = 2;
constexpr int kErrorExit = 1;

struct Globals {
  std::string config = "moons";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data_dir;
  std::vector<std::string> overrides;
};

struct Loaded {
  train::ExperimentConfig config;
  train::DataBundle data;
  init::SplitSpec split;
};

Loaded load(const Globals& g) {
  auto overrides = g.overrides;
  if (g.seed) overrides.push_back(fmt::format("seed={}", *g.seed));
  Loaded l;
  l.config = harness::with_overrides(harness::load_config(g.config), overrides);
  l.data = harness::load_data(l.config, harness::resolve_data_dir(g.data_dir));
  l.split = train::make_run_split(l.config, l.data.train);
  return l;
}

train::RunContext context(const Loaded& l, const Globals& g) {
  train::RunContext ctx;
  ctx.config = l.config;
  ctx.data = &l.data;
  ctx.split = l.split;
  ctx.out = g.out;
  return ctx;
}

json metrics_json(const train::IterationMetrics& m) {
  return {{"iteration", m.iteration},           {"alpha", m.alpha},
          {"model", m.model},                   {"test_accuracy", m.test_accuracy},
          {"test_fine_grained", m.test_fine_grained}, {"valtiny_accuracy", m.valtiny_accuracy},
          {"test_miou", m.test_miou},           {"valtiny_miou", m.valtiny_miou},
          {"pseudo_labeled", m.pseudo_labeled}, {"pseudo_error", m.pseudo_error},
          {"mean_weight", m.mean_weight}};
}

void print_summary(const train::RunSummary& s) {
  json iterations = json::array();
  for (const auto& m : s.iterations) iterations.push_back(metrics_json(m));
  std::cout << json{{"variant", s.variant}, {"config_hash", s.config_hash}, {"final", metrics_json(s.final)},
                    {"iterations", iterations}}
                   .dump(2)
            << "\n";
}

pseudo::PseudoLabels read_labels(const std::string& dir) { return pseudo::load_pseudo_labels(dir); }

pseudo::ErrorReport audit(const pseudo::PseudoLabels& labels, const train::Dataset& train,
                          const std::vector<double>& quantiles) {
  if (const auto* records = std::get_if<std::vector<PseudoLabelRecord>>(&labels)) {
    std::map<std::string, ClassIndex> gt;
    for (const auto& r : *records) {
      const auto id = std::stoul(r.sample_id);
      if (id >= train.size()) throw IndexError(fmt::format("sample {} is not in the dataset", r.sample_id));
      gt[r.sample_id] = train.labels[id];
    }
    return pseudo::pseudo_label_error_stats(*records, gt, quantiles);
  }
  const auto& maps = std::get<std::vector<PseudoLabelMap>>(labels);
  std::vector<std::vector<std::uint8_t>> gt;
  for (const auto& m : maps) {
    const auto id = std::stoul(m.sample_id);
    if (id >= train.size()) throw IndexError(fmt::format("sample {} is not in the dataset", m.sample_id));
    gt.push_back(train.masks[id]);
  }
  return pseudo::pseudo_label_error_stats(maps, gt, quantiles);
}

json report_json(const pseudo::ErrorReport& r) {
  json q = json::array();
  for (const auto& e : r.quantiles) {
    q.push_back({{"fraction", e.fraction}, {"count", e.count}, {"errors", e.errors}, {"error_rate", e.error_rate}});
  }
  return {{"total", r.total}, {"errors", r.errors}, {"overall_error", r.overall_error}, {"quantiles", q}};
}

pseudo::SelectionPolicy::Kind to_selection_kind(train::SelectionKind k) {
  switch (k) {
    case train::SelectionKind::TopFraction: return pseudo::SelectionPolicy::Kind::TopFraction;
    case train::SelectionKind::ClassBalanced: return pseudo::SelectionPolicy::Kind::ClassBalancedTopFraction;
    case train::SelectionKind::Cbst: return pseudo::SelectionPolicy::Kind::CBSTRenormalized;
  }
  return pseudo::SelectionPolicy::Kind::TopFraction;
}

fs::path out_dir(const Globals& g, const std::string& fallback) {
  return g.out.empty() ? fs::path(fallback) : fs::path(g.out);
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("dmt"));
  CLI::App app{"Dynamic mutual training experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Config file or preset name")->capture_default_str();
  app.add_option("--seed", g.seed, "Base seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--data-dir", g.data_dir, "Dataset directory (default: $DMT_DATA_DIR)");
  app.add_option("--set", g.overrides, "key=value config override (repeatable)");
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Only log warnings");

  auto* split = app.add_subcommand("split", "Write the labeled/unlabeled/valtiny split");
  auto* baseline = app.add_subcommand("baseline", "Supervised training on the labeled subset");
  auto* label = app.add_subcommand("label", "Pseudo label the unlabeled pool with a checkpoint");
  std::string label_ckpt;
  double label_alpha = 1.0;
  label->add_option("--checkpoint", label_ckpt, "Model checkpoint")->required();
  label->add_option("--alpha", label_alpha, "Selected fraction")->check(CLI::Range(0.0, 1.0));
  auto* dmt_cmd = app.add_subcommand("dmt", "Iterative dynamic mutual training");
  auto* ablate = app.add_subcommand("ablate", "Run an ablation variant");
  std::string variant;
  ablate->add_option("variant", variant, "dmt, online-st, cbst, dst, dmt-naive, dmt-flip or cl")->required();
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test set");
  std::string eval_ckpt;
  bool eval_json = false;
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
  eval->add_flag("--json", eval_json, "Print JSON instead of a table");
  auto* stats = app.add_subcommand("stats", "Pseudo-label error by confidence quantile");
  std::string stats_labels;
  stats->add_option("--labels", stats_labels, "Pseudo-label directory")->required();
  auto* plot = app.add_subcommand("plot", "Emit static plots");
  std::string plot_run, plot_labels, plot_ckpt;
  std::size_t plot_index = 0;
  plot->add_option("--run", plot_run, "Run directory: metric curves per iteration");
  plot->add_option("--labels", plot_labels, "Pseudo-label directory: error-vs-quantile bars");
  plot->add_option("--checkpoint", plot_ckpt, "With --labels on segmentation: dynamic weight heatmap");
  plot->add_option("--index", plot_index, "Label map index for the heatmap");
  auto* presets = app.add_subcommand("presets", "List the shipped presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kUsageExit;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (presets->parsed()) {
      for (const auto& name : harness::preset_names()) std::cout << name << "\n";
      return 0;
    }
    const auto l = load(g);
    if (split->parsed()) {
      if (g.out.empty()) {
        std::cout << init::split_to_json(l.split) << "\n";
      } else {
        fs::create_directories(g.out);
        init::save_split(l.split, fs::path(g.out) / "split.json");
      }
    } else if (baseline->parsed()) {
      print_summary(train::run_baseline(context(l, g)));
    } else if (dmt_cmd->parsed()) {
      print_summary(train::run_ablation(train::AblationVariant::DMT, context(l, g)));
    } else if (ablate->parsed()) {
      print_summary(train::run_ablation(train::parse_variant(variant), context(l, g)));
    } else if (label->parsed()) {
      const auto model = nn::from_checkpoint(nn::load_checkpoint(label_ckpt));
      const auto ctx = context(l, g);
      const auto ids = train::unlabeled_pool(ctx);
      const pseudo::LabelSource source{fs::path(label_ckpt).stem().string(), 1};
      const auto dir = out_dir(g, "labels");
      if (l.data.train.task == train::Task::Classification) {
        const auto preds = train::keyed_predictions(*model, l.data.train, ids, l.config.eval_batch);
        pseudo::save_pseudo_labels(pseudo::select(preds, {to_selection_kind(l.config.selection), label_alpha}, source),
                                   dir, label_alpha);
      } else {
        const auto maps = train::keyed_maps(*model, l.data.train, ids, l.config.eval_batch);
        pseudo::save_pseudo_labels(pseudo::select(maps, {to_selection_kind(l.config.selection), label_alpha}, source),
                                   dir, label_alpha);
      }
      std::cout << json{{"labels", dir.string()}, {"pool", ids.size()}}.dump() << "\n";
    } else if (eval->parsed()) {
      const auto model = nn::from_checkpoint(nn::load_checkpoint(eval_ckpt));
      const auto ids = train::all_ids(l.data.test);
      std::vector<std::pair<std::string, double>> rows;
      if (l.data.test.task == train::Task::Classification) {
        const auto s = train::evaluate_classification(*model, l.data.test, ids, l.config.eval_batch);
        rows = {{"accuracy", s.accuracy}, {"fine_grained", s.fine_grained}};
      } else {
        const auto s = train::evaluate_segmentation(*model, l.data.test, ids, l.config.eval_batch);
        rows = {{"mean_iou", s.mean_iou}, {"pixel_accuracy", s.pixel_accuracy}};
      }
      if (eval_json) {
        json result;
        for (const auto& [k, v] : rows) result[k] = v;
        result["samples"] = ids.size();
        std::cout << result.dump() << "\n";
      } else {
        std::cout << fmt::format("{:<16}{:>12}\n", "metric", "value");
        for (const auto& [k, v] : rows) std::cout << fmt::format("{:<16}{:>12.6f}\n", k, v);
        std::cout << fmt::format("{:<16}{:>12}\n", "samples", ids.size());
      }
    } else if (stats->parsed()) {
      const auto report = audit(read_labels(stats_labels), l.data.train, {0.2, 0.4, 0.6, 0.8, 1.0});
      std::cout << report_json(report).dump(2) << "\n";
    } else if (plot->parsed()) {
      const auto dir = out_dir(g, "plots");
      std::vector<std::string> written;
      if (!plot_run.empty()) {
        std::map<std::string, harness::Series> curves;
        std::ifstream in(fs::path(plot_run) / "runlog.jsonl");
        if (!in) throw IoError(fmt::format("{} has no runlog.jsonl", plot_run));
        std::string line;
        const bool seg = l.data.train.task == train::Task::Segmentation;
        while (std::getline(in, line)) {
          const auto j = json::parse(line);
          if (j.at("event") != "iteration") continue;
          const auto& m = j.at("metrics");
          auto& s = curves[m.at("model").get<std::string>()];
          s.name = "model " + m.at("model").get<std::string>();
          s.x.push_back(m.at("iteration").get<double>());
          s.y.push_back(m.at(seg ? "test_miou" : "test_accuracy").get<double>());
        }
        std::vector<harness::Series> series;
        for (auto& [name, s] : curves) series.push_back(s);
        harness::write_line_chart(dir / "metrics.svg", seg ? "Test mean IoU" : "Test accuracy", "iteration",
                                  seg ? "mean IoU" : "accuracy", series);
        written.push_back((dir / "metrics.svg").string());
      }
      if (!plot_labels.empty()) {
        const auto labels = read_labels(plot_labels);
        const auto report = audit(labels, l.data.train, {0.2, 0.4, 0.6, 0.8, 1.0});
        std::vector<harness::Bar> bars;
        for (const auto& q : report.quantiles) {
          bars.push_back({fmt::format("top {:.0f}%", q.fraction * 100), q.error_rate * 100});
        }
        harness::write_bar_chart(dir / "error_by_quantile.svg", "Pseudo-label error by confidence quantile",
                                 "error rate (%)", bars);
        written.push_back((dir / "error_by_quantile.svg").string());
        if (!plot_ckpt.empty()) {
          const auto* maps = std::get_if<std::vector<PseudoLabelMap>>(&labels);
          if (!maps) throw ConfigError("weight heatmaps need segmentation labels");
          if (plot_index >= maps->size()) throw IndexError(fmt::format("label map {} out of range", plot_index));
          const auto& map = (*maps)[plot_index];
          const auto model = nn::from_checkpoint(nn::load_checkpoint(plot_ckpt));
          const std::vector<std::size_t> id{std::stoul(map.sample_id)};
          const auto probs = train::keyed_maps(*model, l.data.train, id, 1).at(0).map;
          const auto weights = dynamic_weight_map(map, probs, GammaPair(l.config.gamma1, l.config.gamma2));
          harness::write_heatmap_png(dir / "weights.png", weights.weights, map.height, map.width);
          written.push_back((dir / "weights.png").string());
        }
      }
      if (written.empty()) throw ConfigError("plot needs --run or --labels");
      std::cout << json{{"written", written}}.dump() << "\n";
    }
    return 0;
  } catch (const dmt::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
  }
  return kErrorExit;
}
