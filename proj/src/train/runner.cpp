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

#include "dmt/train/runner.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "dmt/core/error.hpp"
#include "dmt/core/random.hpp"
#include "dmt/metrics/metrics.hpp"
#include "dmt/pseudo/error_stats.hpp"
#include "dmt/pseudo/serialization.hpp"

namespace dmt::train {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kStreamTrain = 101;
constexpr std::uint64_t kStreamSampling = 102;
constexpr std::uint64_t kRoleA = 1;
constexpr std::uint64_t kRoleB = 2;

json to_json(const IterationMetrics& m) {
  return {{"iteration", m.iteration},
          {"alpha", m.alpha},
          {"model", m.model},
          {"test_accuracy", m.test_accuracy},
          {"test_fine_grained", m.test_fine_grained},
          {"valtiny_accuracy", m.valtiny_accuracy},
          {"test_miou", m.test_miou},
          {"valtiny_miou", m.valtiny_miou},
          {"pseudo_labeled", m.pseudo_labeled},
          {"pseudo_error", m.pseudo_error},
          {"mean_weight", m.mean_weight},
          {"agreement", m.agreement},
          {"negative_disagreement", m.negative_disagreement},
          {"positive_disagreement", m.positive_disagreement},
          {"checkpoint", m.checkpoint},
          {"checkpoint_sha256", m.checkpoint_sha256}};
}

IterationMetrics from_json(const json& j) {
  IterationMetrics m;
  m.iteration = j.at("iteration").get<std::size_t>();
  m.alpha = j.at("alpha").get<double>();
  m.model = j.at("model").get<std::string>();
  m.test_accuracy = j.at("test_accuracy").get<double>();
  m.test_fine_grained = j.at("test_fine_grained").get<double>();
  m.valtiny_accuracy = j.at("valtiny_accuracy").get<double>();
  m.test_miou = j.at("test_miou").get<double>();
  m.valtiny_miou = j.at("valtiny_miou").get<double>();
  m.pseudo_labeled = j.at("pseudo_labeled").get<std::size_t>();
  m.pseudo_error = j.at("pseudo_error").get<double>();
  m.mean_weight = j.at("mean_weight").get<double>();
  m.agreement = j.at("agreement").get<std::size_t>();
  m.negative_disagreement = j.at("negative_disagreement").get<std::size_t>();
  m.positive_disagreement = j.at("positive_disagreement").get<std::size_t>();
  m.checkpoint = j.at("checkpoint").get<std::string>();
  m.checkpoint_sha256 = j.at("checkpoint_sha256").get<std::string>();
  return m;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError(fmt::format("cannot append to {}", path.string()));
  out << line << '\n';
}

void write_atomic(const fs::path& path, const std::string& text) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", tmp.string()));
    out << text;
  }
  fs::rename(tmp, path);
}

// Append-only run record with resume support. A run directory holds
// config.txt, runlog.jsonl, timings.jsonl, trace.jsonl, state.json and one
// iter_NN directory per completed iteration.
class RunWriter {
 public:
  RunWriter(const RunContext& ctx, std::string variant)
      : out_(ctx.out), variant_(std::move(variant)), hash_(config_hash(ctx.config)) {
    if (out_.empty()) return;
    fs::create_directories(out_);
    const auto state_path = out_ / "state.json";
    if (fs::exists(state_path)) {
      const auto state = json::parse(read_lines(state_path).at(0));
      if (state.at("config_hash") != hash_ || state.at("variant") != variant_) {
        throw ConfigError(fmt::format("{} holds a different run; use a fresh --out", out_.string()));
      }
      completed_ = state.at("completed").get<int>();
      // Drop log entries from an iteration that did not commit.
      std::string kept;
      for (const auto& line : read_lines(out_ / "runlog.jsonl")) {
        const auto j = json::parse(line);
        if (j.at("event") == "iteration" && j.at("metrics").at("iteration").get<int>() > completed_) continue;
        if (j.at("event") == "iteration") resumed_.push_back(from_json(j.at("metrics")));
        kept += line + "\n";
      }
      write_atomic(out_ / "runlog.jsonl", kept);
      spdlog::info("resuming {} after iteration {}", out_.string(), completed_);
    } else {
      write_atomic(out_ / "config.txt", serialize_config(ctx.config));
      init::save_split(ctx.split, out_ / "split.json");
      json start{{"event", "start"}, {"config_hash", hash_}, {"variant", variant_},
                 {"config", serialize_config(ctx.config)}};
      append_line(out_ / "runlog.jsonl", start.dump());
    }
  }

  bool persistent() const { return !out_.empty(); }
  bool done(std::size_t iteration) const { return static_cast<int>(iteration) <= completed_; }
  const std::string& hash() const { return hash_; }

  fs::path iteration_dir(std::size_t iteration) const {
    const auto dir = out_ / fmt::format("iter_{:02d}", iteration);
    fs::create_directories(dir);
    return dir;
  }

  std::vector<IterationMetrics> resumed(std::size_t iteration) const {
    std::vector<IterationMetrics> out;
    for (const auto& m : resumed_) {
      if (m.iteration == iteration) out.push_back(m);
    }
    return out;
  }

  void log(const IterationMetrics& m) {
    if (!persistent()) return;
    json entry{{"event", "iteration"}, {"config_hash", hash_}, {"variant", variant_}, {"metrics", to_json(m)}};
    append_line(out_ / "runlog.jsonl", entry.dump());
  }

  void timing(std::size_t iteration, const std::string& what, double seconds) {
    if (!persistent()) return;
    json entry{{"config_hash", hash_}, {"iteration", iteration}, {"what", what}, {"seconds", seconds}};
    append_line(out_ / "timings.jsonl", entry.dump());
  }

  void trace(std::size_t iteration, const std::string& model, const std::vector<BatchTrace>& t) {
    if (!persistent()) return;
    std::string text;
    for (const auto& b : t) {
      json j{{"config_hash", hash_},        {"iteration", iteration},
             {"model", model},              {"step", b.step},
             {"batch", b.batch_digest},     {"normalizer", b.normalizer},
             {"labeled_loss", b.labeled_loss}, {"unlabeled_loss", b.unlabeled_loss},
             {"unit_unlabeled_loss", b.unit_unlabeled_loss}, {"case3_loss", b.case3_loss},
             {"agreement", b.agreement},    {"negative_disagreement", b.negative_disagreement},
             {"positive_disagreement", b.positive_disagreement}};
      text += j.dump() + "\n";
    }
    std::ofstream(out_ / "trace.jsonl", std::ios::app) << text;
  }

  void commit(std::size_t iteration) {
    completed_ = static_cast<int>(iteration);
    if (!persistent()) return;
    json state{{"config_hash", hash_}, {"variant", variant_}, {"completed", completed_}};
    write_atomic(out_ / "state.json", state.dump() + "\n");
  }

 private:
  fs::path out_;
  std::string variant_;
  std::string hash_;
  int completed_ = -1;
  std::vector<IterationMetrics> resumed_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

TrainSpec base_spec(const ExperimentConfig& c) {
  TrainSpec s;
  s.learning_rate = c.learning_rate;
  s.lr_schedule = c.lr_schedule;
  s.sgd = {c.momentum, c.weight_decay};
  s.augmentation = c.augmentation;
  s.jitter_std = static_cast<float>(c.jitter_std);
  s.mixup = c.mixup;
  s.mixup_alpha = c.mixup_alpha;
  s.ema_decay = c.ema_decay;
  s.time_budget_seconds = c.time_budget_seconds;
  return s;
}

TrainSpec supervised_spec(const ExperimentConfig& c, std::size_t epochs, std::uint64_t seed) {
  auto s = base_spec(c);
  s.epochs = epochs;
  s.composition = BatchComposition(c.batch_size, 0);
  s.mixup = false;
  s.seed = seed;
  return s;
}

TrainSpec pseudo_spec(const ExperimentConfig& c, std::uint64_t seed) {
  auto s = base_spec(c);
  s.epochs = c.epochs_per_iteration;
  s.composition = c.composition();
  s.rule = c.weight_rule;
  s.gammas = GammaPair(c.gamma1, c.gamma2);
  s.gamma_schedule = c.gamma_schedule;
  s.gamma_sign = c.gamma_schedule_sign;
  s.seed = seed;
  return s;
}

// An empty selection leaves the iteration with labeled data only.
TrainSpec pool_spec(const ExperimentConfig& c, std::uint64_t seed, std::size_t pool_size) {
  auto s = pseudo_spec(c, seed);
  if (pool_size == 0) {
    spdlog::warn("no pseudo labels selected; training on labeled data only");
    s.composition = BatchComposition(c.batch_size, 0);
  }
  return s;
}

std::string save_model(const nn::Backbone& model, const fs::path& path, std::string* sha) {
  nn::save_checkpoint(nn::to_checkpoint(model), path);
  *sha = pseudo::sha256_file(path);
  return path.filename().string();
}

std::unique_ptr<nn::Backbone> load_model(const fs::path& path) {
  return nn::from_checkpoint(nn::load_checkpoint(path));
}

void score(IterationMetrics& m, const nn::Backbone& model, const RunContext& ctx) {
  const auto& d = *ctx.data;
  const auto test_ids = all_ids(d.test);
  const std::size_t batch = ctx.config.eval_batch;
  if (d.train.task == Task::Classification) {
    const auto t = evaluate_classification(model, d.test, test_ids, batch);
    m.test_accuracy = t.accuracy;
    m.test_fine_grained = t.fine_grained;
    if (!ctx.split.valtiny_ids.empty()) {
      m.valtiny_accuracy = evaluate_classification(model, d.train, ctx.split.valtiny_ids, batch).accuracy;
    }
  } else {
    const auto t = evaluate_segmentation(model, d.test, test_ids, batch);
    m.test_miou = t.mean_iou;
    m.test_accuracy = t.pixel_accuracy;
    if (!ctx.split.valtiny_ids.empty()) {
      m.valtiny_miou = evaluate_segmentation(model, d.train, ctx.split.valtiny_ids, batch).mean_iou;
    }
  }
}

void record_stats(IterationMetrics& m, const TrainStats& s) {
  m.mean_weight = s.mean_unlabeled_weight;
  m.agreement = s.agreement;
  m.negative_disagreement = s.negative_disagreement;
  m.positive_disagreement = s.positive_disagreement;
}

double audit_records(const std::vector<PseudoLabelRecord>& records, const Dataset& train,
                     std::size_t* selected) {
  std::map<std::string, ClassIndex> gt;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.ignored()) continue;
    gt[r.sample_id] = train.labels[std::stoul(r.sample_id)];
    ++n;
  }
  *selected = n;
  if (n == 0) return 0.0;
  return pseudo::pseudo_label_error_stats(records, gt, {}).overall_error;
}

double audit_maps(const std::vector<PseudoLabelMap>& maps, const Dataset& train, std::size_t* selected) {
  std::vector<std::vector<std::uint8_t>> gt;
  std::size_t n = 0;
  for (const auto& m : maps) {
    gt.push_back(train.masks[std::stoul(m.sample_id)]);
    n += static_cast<std::size_t>(std::count_if(m.labels.begin(), m.labels.end(),
                                                [](std::uint8_t v) { return v != kIgnored; }));
  }
  *selected = n;
  if (n == 0) return 0.0;
  return pseudo::pseudo_label_error_stats(maps, gt, {}).overall_error;
}

// Stores labels under dir and reads them back, so training consumes
// exactly what is on disk; in memory the labels pass straight through.
template <typename T>
std::vector<T> persist_labels(const std::vector<T>& labels, const fs::path& dir, double alpha,
                              bool persistent) {
  if (!persistent) return labels;
  pseudo::save_pseudo_labels(labels, dir, alpha);
  return std::get<std::vector<T>>(pseudo::load_pseudo_labels(dir));
}

template <typename T>
void verify_unchanged(const std::vector<T>& labels, const fs::path& dir, bool persistent) {
  if (!persistent) return;
  if (std::get<std::vector<T>>(pseudo::load_pseudo_labels(dir)) != labels) {
    throw FormatError(fmt::format("pseudo labels in {} changed during training", dir.string()));
  }
}

std::vector<PseudoLabelRecord> select_records(const std::vector<pseudo::KeyedPrediction>& preds,
                                              SelectionKind kind, double alpha,
                                              const pseudo::LabelSource& source) {
  switch (kind) {
    case SelectionKind::TopFraction: return pseudo::top_fraction_select(preds, alpha, source);
    case SelectionKind::ClassBalanced: return pseudo::class_balanced_select(preds, alpha, source);
    case SelectionKind::Cbst: return pseudo::cbst_renormalized_select(preds, alpha, source);
  }
  return {};
}

std::vector<PseudoLabelMap> select_maps(const std::vector<pseudo::KeyedProbabilityMap>& maps,
                                        SelectionKind kind, double alpha,
                                        const pseudo::LabelSource& source) {
  if (kind == SelectionKind::Cbst) return pseudo::cbst_renormalized_select(maps, alpha, source);
  return pseudo::class_balanced_select(maps, alpha, source);
}

void require_task(const RunContext& ctx, Task task) {
  if (!ctx.data) throw ConfigError("no dataset loaded");
  if (ctx.data->train.task != task) {
    throw ConfigError(fmt::format("dataset '{}' is {}, this runner needs {}", ctx.data->train.name,
                                  to_string(ctx.data->train.task), to_string(task)));
  }
  ctx.config.validate();
}

}  // namespace

AblationVariant parse_variant(const std::string& name) {
  for (auto v : {AblationVariant::DMT, AblationVariant::OnlineST, AblationVariant::CBST,
                 AblationVariant::DST, AblationVariant::DMTNaive, AblationVariant::DMTFlip,
                 AblationVariant::CL}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError(fmt::format("unknown variant '{}'", name));
}

const char* to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::DMT: return "dmt";
    case AblationVariant::OnlineST: return "online-st";
    case AblationVariant::CBST: return "cbst";
    case AblationVariant::DST: return "dst";
    case AblationVariant::DMTNaive: return "dmt-naive";
    case AblationVariant::DMTFlip: return "dmt-flip";
    case AblationVariant::CL: return "cl";
  }
  return "unknown";
}

ExperimentConfig apply_variant(ExperimentConfig c, AblationVariant variant) {
  const bool seg = c.task() == Task::Segmentation;
  switch (variant) {
    case AblationVariant::DMT:
    case AblationVariant::OnlineST:
      break;
    case AblationVariant::CBST:
      c.selection = SelectionKind::Cbst;
      c.weight_rule = WeightRule::Unit;
      c.gamma_schedule = false;
      if (seg) {
        c.pairing = Pairing::Self;
        c.models = 1;
      }
      break;
    case AblationVariant::DST:
      if (seg) {
        c.pairing = Pairing::Self;
        c.models = 1;
      } else {
        c.training_mode = TrainingMode::FineTune;
      }
      break;
    case AblationVariant::DMTNaive:
      c.weight_rule = WeightRule::Naive;
      c.gamma_schedule = false;
      break;
    case AblationVariant::DMTFlip:
      c.weight_rule = WeightRule::Flip;
      c.gamma_schedule = false;
      break;
    case AblationVariant::CL:
      c.weight_rule = WeightRule::Unit;
      c.gamma_schedule = false;
      if (seg) {
        c.selection = SelectionKind::ClassBalanced;
        c.pairing = Pairing::Self;
        c.models = 1;
      }
      break;
  }
  return c;
}

init::SplitSpec make_run_split(const ExperimentConfig& config, const Dataset& train) {
  if (train.task == Task::Classification) {
    return init::make_split(train.labels, train.num_classes, config.labeled_ratio, config.valtiny_size,
                            config.seed);
  }
  const std::vector<ClassIndex> single(train.size(), 0);
  return init::make_split(single, 1, config.labeled_ratio, config.valtiny_size, config.seed);
}

std::vector<std::size_t> unlabeled_pool(const RunContext& ctx) {
  auto ids = ctx.split.unlabeled_ids;
  if (ctx.config.unlabeled_limit > 0 && ids.size() > ctx.config.unlabeled_limit) {
    ids.resize(ctx.config.unlabeled_limit);
  }
  return ids;
}

RunSummary run_baseline(const RunContext& ctx) {
  if (!ctx.data) throw ConfigError("no dataset loaded");
  ctx.config.validate();
  const auto& c = ctx.config;
  RunWriter writer(ctx, "baseline");
  RunSummary summary{"baseline", writer.hash(), {}, {}, {}};
  if (writer.done(0)) {
    summary.iterations = writer.resumed(0);
    summary.final = summary.iterations.back();
    return summary;
  }
  const int epochs = metrics::baseline_epochs(c.labeled_ratio.value(), static_cast<int>(c.oracle_epochs));
  init::SeedCounter seeds(c.seed);
  auto model = nn::make_backbone(c.arch, seeds.seed_at(0));
  Stopwatch clock;
  train_model(*model, ctx.data->train, ctx.split.labeled_ids, nullptr, {},
              supervised_spec(c, static_cast<std::size_t>(epochs), derive_seed(c.seed, {kStreamTrain, 0, kRoleA})));
  IterationMetrics m;
  m.model = "F";
  score(m, *model, ctx);
  if (writer.persistent()) {
    m.checkpoint = "iter_00/" + save_model(*model, writer.iteration_dir(0) / "model.ckpt", &m.checkpoint_sha256);
  }
  writer.timing(0, "baseline", clock.seconds());
  writer.log(m);
  writer.commit(0);
  summary.iterations.push_back(m);
  summary.final = m;
  return summary;
}

RunSummary run_dmt_classification(const RunContext& ctx, const std::string& variant) {
  require_task(ctx, Task::Classification);
  const auto& c = ctx.config;
  const auto& train = ctx.data->train;
  const auto unlabeled = unlabeled_pool(ctx);
  const auto schedule = c.schedule();
  RunWriter writer(ctx, variant);
  RunSummary summary{variant, writer.hash(), {}, {}, {}};
  init::SeedCounter seeds(c.seed);

  std::unique_ptr<nn::Backbone> prev;
  for (std::size_t i = 0; i <= schedule.iterations(); ++i) {
    const fs::path ckpt = writer.persistent() ? writer.iteration_dir(i) / "model.ckpt" : fs::path();
    if (writer.done(i)) {
      prev = load_model(ckpt);
      const auto logged = writer.resumed(i);
      summary.iterations.insert(summary.iterations.end(), logged.begin(), logged.end());
      continue;
    }
    Stopwatch clock;
    IterationMetrics m;
    m.iteration = i;
    m.model = "F";
    std::unique_ptr<nn::Backbone> model;
    const std::uint64_t train_seed = derive_seed(c.seed, {kStreamTrain, i, kRoleA});
    if (i == 0) {
      model = nn::make_backbone(c.arch, seeds.seed_at(0));
      train_model(*model, train, ctx.split.labeled_ids, nullptr, {},
                  supervised_spec(c, c.initial_epochs, train_seed));
    } else {
      m.alpha = schedule.alphas[i - 1];
      const auto preds = keyed_predictions(*prev, train, unlabeled, c.eval_batch);
      const pseudo::LabelSource source{fmt::format("F{}", i - 1), static_cast<int>(i)};
      const fs::path label_dir = writer.persistent() ? writer.iteration_dir(i) / "labels" : fs::path();
      const auto records = persist_labels(select_records(preds, c.selection, m.alpha, source), label_dir,
                                          m.alpha, writer.persistent());
      m.pseudo_error = audit_records(records, train, &m.pseudo_labeled);
      const auto pool = pool_from_records(records);
      model = c.training_mode == TrainingMode::ReTrain ? nn::make_backbone(c.arch, seeds.seed_at(i))
                                                       : prev->clone();
      std::vector<BatchTrace> trace;
      const auto stats = train_model(*model, train, ctx.split.labeled_ids, &pool, {},
                                     pool_spec(c, train_seed, pool.size()), c.trace ? &trace : nullptr);
      record_stats(m, stats);
      verify_unchanged(records, label_dir, writer.persistent());
      if (c.trace) {
        writer.trace(i, "F", trace);
        summary.traces.emplace_back(fmt::format("{}/F", i), std::move(trace));
      }
    }
    score(m, *model, ctx);
    if (writer.persistent()) {
      m.checkpoint = fmt::format("iter_{:02d}/", i) + save_model(*model, ckpt, &m.checkpoint_sha256);
    }
    writer.timing(i, "iteration", clock.seconds());
    writer.log(m);
    writer.commit(i);
    spdlog::info("{} iteration {}: test accuracy {:.4f}", variant, i, m.test_accuracy);
    summary.iterations.push_back(m);
    prev = std::move(model);
  }
  summary.final = summary.iterations.back();
  return summary;
}

RunSummary run_dmt_segmentation(const RunContext& ctx, const std::string& variant) {
  require_task(ctx, Task::Segmentation);
  const auto& c = ctx.config;
  const auto& train = ctx.data->train;
  const auto unlabeled = unlabeled_pool(ctx);
  const auto schedule = c.schedule();
  const bool dual = c.models == 2;
  RunWriter writer(ctx, variant);
  RunSummary summary{variant, writer.hash(), {}, {}, {}};

  std::unique_ptr<nn::Backbone> prev_a, prev_b;
  std::vector<std::size_t> subset_a = ctx.split.labeled_ids, subset_b = ctx.split.labeled_ids;
  for (std::size_t i = 0; i <= schedule.iterations(); ++i) {
    const fs::path dir = writer.persistent() ? writer.iteration_dir(i) : fs::path();
    if (writer.done(i)) {
      prev_a = load_model(dir / "model_a.ckpt");
      if (dual) prev_b = load_model(dir / "model_b.ckpt");
      const auto logged = writer.resumed(i);
      summary.iterations.insert(summary.iterations.end(), logged.begin(), logged.end());
      continue;
    }
    Stopwatch clock;
    std::unique_ptr<nn::Backbone> next_a, next_b;
    IterationMetrics ma, mb;
    ma.iteration = mb.iteration = i;
    ma.model = "A";
    mb.model = "B";
    const std::uint64_t seed_a = derive_seed(c.seed, {kStreamTrain, i, kRoleA});
    const std::uint64_t seed_b = derive_seed(c.seed, {kStreamTrain, i, kRoleB});
    if (i == 0) {
      init::InitPolicy policy;
      policy.kind = c.init_policy;
      policy.seeds = {c.init_seed_a, c.init_seed_b};
      policy.checkpoints = {c.checkpoint_a, c.checkpoint_b};
      if (c.subset_size > 0) policy.subset_size = c.subset_size;
      policy.sampling_seed = derive_seed(c.seed, {kStreamSampling});
      init::CheckpointRegistry registry;
      for (const auto& name : {c.checkpoint_a, c.checkpoint_b}) {
        if (!name.empty()) registry[name] = name;
      }
      auto pair = init::init_model_pair(policy, ctx.split.labeled_ids, c.arch, registry);
      next_a = std::move(pair.a);
      next_b = std::move(pair.b);
      subset_a = pair.subset_a;
      subset_b = pair.subset_b;
      train_model(*next_a, train, subset_a, nullptr, {}, supervised_spec(c, c.initial_epochs, seed_a));
      if (dual) train_model(*next_b, train, subset_b, nullptr, {}, supervised_spec(c, c.initial_epochs, seed_b));
    } else {
      const double alpha = schedule.alphas[i - 1];
      ma.alpha = mb.alpha = alpha;
      auto label = [&](const nn::Backbone& model, const std::string& name, const std::string& subdir) {
        const auto maps = keyed_maps(model, train, unlabeled, c.eval_batch);
        const pseudo::LabelSource source{fmt::format("{}{}", name, i - 1), static_cast<int>(i)};
        return persist_labels(select_maps(maps, c.selection, alpha, source),
                              writer.persistent() ? dir / subdir : fs::path(), alpha, writer.persistent());
      };
      const auto labels_a = label(*prev_a, "A", "labels_a");
      const auto labels_b = dual ? label(*prev_b, "B", "labels_b") : labels_a;
      // Cross pairing: the labels of one model train the other.
      const bool cross = dual && c.pairing == Pairing::Cross;
      const auto& for_a = cross ? labels_b : labels_a;
      const auto& for_b = cross ? labels_a : labels_b;
      const auto pool_a = pool_from_maps(for_a);
      const auto pool_b = pool_from_maps(for_b);
      ma.pseudo_error = audit_maps(for_a, train, &ma.pseudo_labeled);
      mb.pseudo_error = audit_maps(for_b, train, &mb.pseudo_labeled);
      auto start = [&](const nn::Backbone& prev, std::uint64_t fresh_seed) {
        return c.training_mode == TrainingMode::FineTune ? prev.clone() : nn::make_backbone(c.arch, fresh_seed);
      };
      next_a = start(*prev_a, derive_seed(seed_a, {kStreamSampling}));
      if (dual) next_b = start(*prev_b, derive_seed(seed_b, {kStreamSampling}));
      std::vector<BatchTrace> trace_a, trace_b;
      TrainStats stats_a, stats_b;
      auto run_a = [&] {
        stats_a = train_model(*next_a, train, ctx.split.labeled_ids, &pool_a, {}, pool_spec(c, seed_a, pool_a.size()),
                              c.trace ? &trace_a : nullptr);
      };
      auto run_b = [&] {
        stats_b = train_model(*next_b, train, ctx.split.labeled_ids, &pool_b, {}, pool_spec(c, seed_b, pool_b.size()),
                              c.trace ? &trace_b : nullptr);
      };
      if (dual && c.concurrent) {
        std::thread worker(run_b);
        run_a();
        worker.join();
      } else {
        run_a();
        if (dual) run_b();
      }
      record_stats(ma, stats_a);
      record_stats(mb, stats_b);
      if (writer.persistent()) {
        verify_unchanged(labels_a, dir / "labels_a", true);
        if (dual) verify_unchanged(labels_b, dir / "labels_b", true);
      }
      if (c.trace) {
        writer.trace(i, "A", trace_a);
        summary.traces.emplace_back(fmt::format("{}/A", i), std::move(trace_a));
        if (dual) {
          writer.trace(i, "B", trace_b);
          summary.traces.emplace_back(fmt::format("{}/B", i), std::move(trace_b));
        }
      }
    }
    score(ma, *next_a, ctx);
    if (writer.persistent()) {
      ma.checkpoint = fmt::format("iter_{:02d}/", i) + save_model(*next_a, dir / "model_a.ckpt", &ma.checkpoint_sha256);
    }
    writer.log(ma);
    summary.iterations.push_back(ma);
    if (dual) {
      score(mb, *next_b, ctx);
      if (writer.persistent()) {
        mb.checkpoint = fmt::format("iter_{:02d}/", i) + save_model(*next_b, dir / "model_b.ckpt", &mb.checkpoint_sha256);
      }
      writer.log(mb);
      summary.iterations.push_back(mb);
    }
    writer.timing(i, "iteration", clock.seconds());
    writer.commit(i);
    spdlog::info("{} iteration {}: test mIoU A {:.4f}{}", variant, i, ma.test_miou,
                 dual ? fmt::format(", B {:.4f}", mb.test_miou) : "");
    prev_a = std::move(next_a);
    prev_b = std::move(next_b);
  }
  // Best of the two final models by valtiny mean IoU.
  const std::size_t last = schedule.iterations();
  const IterationMetrics* best = nullptr;
  for (const auto& m : summary.iterations) {
    if (m.iteration != last) continue;
    if (!best || m.valtiny_miou > best->valtiny_miou) best = &m;
  }
  summary.final = *best;
  return summary;
}

RunSummary run_online_st(const RunContext& ctx) {
  if (!ctx.data) throw ConfigError("no dataset loaded");
  ctx.config.validate();
  const auto& c = ctx.config;
  const auto& train = ctx.data->train;
  const auto unlabeled = unlabeled_pool(ctx);
  RunWriter writer(ctx, "online-st");
  RunSummary summary{"online-st", writer.hash(), {}, {}, {}};
  init::SeedCounter seeds(c.seed);
  std::unique_ptr<nn::Backbone> model;
  for (std::size_t i = 0; i <= 1; ++i) {
    const fs::path ckpt = writer.persistent() ? writer.iteration_dir(i) / "model.ckpt" : fs::path();
    if (writer.done(i)) {
      model = load_model(ckpt);
      const auto logged = writer.resumed(i);
      summary.iterations.insert(summary.iterations.end(), logged.begin(), logged.end());
      continue;
    }
    Stopwatch clock;
    IterationMetrics m;
    m.iteration = i;
    m.model = "F";
    const std::uint64_t train_seed = derive_seed(c.seed, {kStreamTrain, i, kRoleA});
    if (i == 0) {
      model = nn::make_backbone(c.arch, seeds.seed_at(0));
      train_model(*model, train, ctx.split.labeled_ids, nullptr, {},
                  supervised_spec(c, c.initial_epochs, train_seed));
    } else {
      m.alpha = 1.0;
      auto spec = pseudo_spec(c, train_seed);
      spec.epochs = c.online_epochs;
      spec.rule = WeightRule::Unit;
      spec.online_threshold = c.online_threshold;
      const auto stats = train_model(*model, train, ctx.split.labeled_ids, nullptr, unlabeled, spec);
      record_stats(m, stats);
    }
    score(m, *model, ctx);
    if (writer.persistent()) {
      m.checkpoint = fmt::format("iter_{:02d}/", i) + save_model(*model, ckpt, &m.checkpoint_sha256);
    }
    writer.timing(i, "iteration", clock.seconds());
    writer.log(m);
    writer.commit(i);
    summary.iterations.push_back(m);
  }
  summary.final = summary.iterations.back();
  return summary;
}

RunSummary run_ablation(AblationVariant variant, const RunContext& ctx) {
  RunContext adjusted = ctx;
  adjusted.config = apply_variant(ctx.config, variant);
  if (variant == AblationVariant::OnlineST) return run_online_st(adjusted);
  if (adjusted.config.task() == Task::Segmentation) {
    return run_dmt_segmentation(adjusted, to_string(variant));
  }
  return run_dmt_classification(adjusted, to_string(variant));
}

}  // namespace dmt::train
