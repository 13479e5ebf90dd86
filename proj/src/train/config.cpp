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

#include "dmt/train/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "dmt/core/error.hpp"
#include "dmt/pseudo/serialization.hpp"

namespace dmt::train {

const char* to_string(TrainingMode m) { return m == TrainingMode::FineTune ? "fine-tune" : "re-train"; }
const char* to_string(Pairing p) { return p == Pairing::Cross ? "cross" : "self"; }
const char* to_string(SelectionKind s) {
  switch (s) {
    case SelectionKind::TopFraction: return "top-fraction";
    case SelectionKind::ClassBalanced: return "class-balanced";
    case SelectionKind::Cbst: return "cbst";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError(fmt::format("{}: '{}' is not {}", key, value, expected));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

template <typename E>
E parse_enum(const std::string& key, const std::string& value, std::initializer_list<E> options) {
  for (auto e : options) {
    if (value == to_string(e)) return e;
  }
  bad_value(key, value, "a known option");
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string join_alphas(const std::vector<double>& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + format_double(a[i]);
  return s;
}

const char* sign_name(ScheduleSign s) { return s == ScheduleSign::Positive ? "positive" : "negative"; }

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define DMT_SIZE_FIELD(name)                                                                    \
  {#name, {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
             c.name = parse_number<std::size_t>(k, v);                                          \
           },                                                                                   \
           [](const ExperimentConfig& c) { return std::to_string(c.name); }}}
#define DMT_U64_FIELD(name)                                                                     \
  {#name, {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
             c.name = parse_number<std::uint64_t>(k, v);                                        \
           },                                                                                   \
           [](const ExperimentConfig& c) { return std::to_string(c.name); }}}
#define DMT_DOUBLE_FIELD(name)                                                                  \
  {#name, {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
             c.name = parse_number<double>(k, v);                                               \
           },                                                                                   \
           [](const ExperimentConfig& c) { return format_double(c.name); }}}
#define DMT_BOOL_FIELD(name)                                                                    \
  {#name, {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
             c.name = parse_bool(k, v);                                                         \
           },                                                                                   \
           [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); }}}
#define DMT_STRING_FIELD(name)                                                                  \
  {#name, {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.name = v; },   \
           [](const ExperimentConfig& c) { return c.name; }}}

// Ordered: serialization follows this order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      DMT_STRING_FIELD(dataset),
      DMT_SIZE_FIELD(dataset_size),
      DMT_SIZE_FIELD(test_size),
      DMT_DOUBLE_FIELD(moons_noise),
      DMT_SIZE_FIELD(grid_size),
      DMT_SIZE_FIELD(num_classes),
      DMT_SIZE_FIELD(shapes_per_image),
      {"labeled_ratio",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          try {
            c.labeled_ratio = Rational::parse(v);
          } catch (const ValidationError&) {
            bad_value(k, v, "a ratio like 1/8");
          }
        },
        [](const ExperimentConfig& c) { return c.labeled_ratio.to_string(); }}},
      DMT_SIZE_FIELD(valtiny_size),
      DMT_SIZE_FIELD(unlabeled_limit),
      DMT_STRING_FIELD(arch),
      DMT_DOUBLE_FIELD(gamma1),
      DMT_DOUBLE_FIELD(gamma2),
      DMT_BOOL_FIELD(gamma_schedule),
      {"gamma_schedule_sign",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "positive") c.gamma_schedule_sign = ScheduleSign::Positive;
          else if (v == "negative") c.gamma_schedule_sign = ScheduleSign::Negative;
          else bad_value(k, v, "positive or negative");
        },
        [](const ExperimentConfig& c) { return std::string(sign_name(c.gamma_schedule_sign)); }}},
      DMT_DOUBLE_FIELD(learning_rate),
      DMT_DOUBLE_FIELD(weight_decay),
      DMT_DOUBLE_FIELD(momentum),
      {"lr_schedule",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.lr_schedule = parse_enum(k, v, {nn::LrSchedule::Constant, nn::LrSchedule::Cosine,
                                            nn::LrSchedule::Poly});
        },
        [](const ExperimentConfig& c) { return std::string(nn::to_string(c.lr_schedule)); }}},
      {"training_mode",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.training_mode = parse_enum(k, v, {TrainingMode::FineTune, TrainingMode::ReTrain});
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.training_mode)); }}},
      DMT_SIZE_FIELD(epochs_per_iteration),
      DMT_SIZE_FIELD(initial_epochs),
      DMT_SIZE_FIELD(oracle_epochs),
      DMT_SIZE_FIELD(batch_size),
      {"batch_ratio",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          const auto colon = v.find(':');
          if (colon == std::string::npos) bad_value(k, v, "a ratio like 7:1");
          c.batch_ratio = {parse_number<std::size_t>(k, v.substr(0, colon)),
                           parse_number<std::size_t>(k, v.substr(colon + 1))};
        },
        [](const ExperimentConfig& c) {
          return fmt::format("{}:{}", c.batch_ratio.first, c.batch_ratio.second);
        }}},
      {"augmentation",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          try {
            c.augmentation = parse_augmentation(v);
          } catch (const ConfigError&) {
            bad_value(k, v, "a known augmentation");
          }
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.augmentation)); }}},
      DMT_DOUBLE_FIELD(jitter_std),
      DMT_BOOL_FIELD(mixup),
      DMT_DOUBLE_FIELD(mixup_alpha),
      DMT_DOUBLE_FIELD(ema_decay),
      DMT_DOUBLE_FIELD(time_budget_seconds),
      {"alphas",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          std::vector<double> a;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) a.push_back(parse_number<double>(k, trim(item)));
          c.alphas = a;
        },
        [](const ExperimentConfig& c) { return join_alphas(c.alphas); }}},
      {"selection",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.selection = parse_enum(k, v, {SelectionKind::TopFraction, SelectionKind::ClassBalanced,
                                          SelectionKind::Cbst});
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.selection)); }}},
      {"weight_rule",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.weight_rule = parse_enum(k, v, {WeightRule::Dynamic, WeightRule::Unit,
                                            WeightRule::Naive, WeightRule::Flip});
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.weight_rule)); }}},
      {"init_policy",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          try {
            c.init_policy = init::parse_init_kind(v);
          } catch (const ConfigError&) {
            bad_value(k, v, "a known init policy");
          }
        },
        [](const ExperimentConfig& c) { return std::string(init::to_string(c.init_policy)); }}},
      DMT_U64_FIELD(init_seed_a),
      DMT_U64_FIELD(init_seed_b),
      DMT_SIZE_FIELD(subset_size),
      DMT_STRING_FIELD(checkpoint_a),
      DMT_STRING_FIELD(checkpoint_b),
      {"pairing",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.pairing = parse_enum(k, v, {Pairing::Cross, Pairing::Self});
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.pairing)); }}},
      DMT_SIZE_FIELD(models),
      DMT_BOOL_FIELD(concurrent),
      DMT_DOUBLE_FIELD(online_threshold),
      DMT_SIZE_FIELD(online_epochs),
      DMT_SIZE_FIELD(eval_batch),
      DMT_U64_FIELD(seed),
      DMT_BOOL_FIELD(trace),
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

}  // namespace

Task ExperimentConfig::task() const {
  return dataset == "toy-seg" || dataset == "voc" || dataset == "cityscapes" ? Task::Segmentation
                                                                             : Task::Classification;
}

BatchComposition ExperimentConfig::composition() const {
  return BatchComposition::from_ratio(batch_size, batch_ratio.first, batch_ratio.second);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError(fmt::format("{}: {}", key, why));
  };
  if (dataset.empty()) fail("dataset", "required key is missing");
  static const std::vector<std::string> known = {"moons", "toy-seg", "cifar10", "voc", "cityscapes"};
  if (std::find(known.begin(), known.end(), dataset) == known.end()) {
    fail("dataset", fmt::format("unknown dataset '{}'", dataset));
  }
  if (dataset_size < 2) fail("dataset_size", "must be at least 2");
  if (test_size == 0) fail("test_size", "must be positive");
  if (moons_noise < 0) fail("moons_noise", "must be non-negative");
  if (grid_size < 8 || grid_size % 4 != 0) fail("grid_size", "must be a multiple of 4, at least 8");
  if (num_classes < 2 || num_classes > 254) fail("num_classes", "must lie in [2, 254]");
  if (labeled_ratio.num == 0 || labeled_ratio.value() > 1.0) fail("labeled_ratio", "must lie in (0, 1]");
  if (gamma1 < 0) fail("gamma1", "must be non-negative");
  if (gamma2 < 0) fail("gamma2", "must be non-negative");
  if (!(learning_rate > 0)) fail("learning_rate", "must be positive");
  if (weight_decay < 0) fail("weight_decay", "must be non-negative");
  if (momentum < 0 || momentum >= 1) fail("momentum", "must lie in [0, 1)");
  if (epochs_per_iteration == 0) fail("epochs_per_iteration", "must be positive");
  if (initial_epochs == 0) fail("initial_epochs", "must be positive");
  if (oracle_epochs == 0) fail("oracle_epochs", "must be positive");
  try {
    (void)composition();
  } catch (const ConfigError& e) {
    fail("batch_ratio", e.what());
  }
  if (jitter_std < 0) fail("jitter_std", "must be non-negative");
  if (!(mixup_alpha > 0)) fail("mixup_alpha", "must be positive");
  if (ema_decay < 0 || ema_decay >= 1) fail("ema_decay", "must lie in [0, 1)");
  if (time_budget_seconds < 0) fail("time_budget_seconds", "must be non-negative");
  try {
    (void)schedule();
  } catch (const ConfigError& e) {
    fail("alphas", e.what());
  }
  if (online_threshold < 0 || online_threshold >= 1) fail("online_threshold", "must lie in [0, 1)");
  if (online_epochs == 0) fail("online_epochs", "must be positive");
  if (eval_batch == 0) fail("eval_batch", "must be positive");
  if (models != 1 && models != 2) fail("models", "must be 1 or 2");
  if (init_policy == init::InitPolicy::Kind::DistinctRandomSeeds && init_seed_a == init_seed_b) {
    fail("init_seed_b", "must differ from init_seed_a");
  }
  if (init_policy == init::InitPolicy::Kind::DistinctPretrainedWeights &&
      (checkpoint_a.empty() || checkpoint_b.empty() || checkpoint_a == checkpoint_b)) {
    fail("checkpoint_b", "two different checkpoints are required");
  }
  try {
    const auto spec = nn::ArchSpec::parse(arch);
    const bool dense_head = spec.tokens.back()[0] == 'o';
    if (task() == Task::Segmentation && dense_head) fail("arch", "segmentation needs a k<N> head");
    if (task() == Task::Classification && !dense_head) fail("arch", "classification needs an o<N> head");
  } catch (const ConfigError& e) {
    if (std::string(e.what()).rfind("arch:", 0) == 0) throw;
    fail("arch", e.what());
  }
  if (task() == Task::Segmentation) {
    if (mixup) fail("mixup", "is only supported for classification");
    if (gamma_schedule) fail("gamma_schedule", "applies only to classification re-training");
    if (augmentation == Augmentation::Jitter || augmentation == Augmentation::RandomOpCutout) {
      fail("augmentation", "segmentation supports none or scale-crop-flip");
    }
    if (selection == SelectionKind::TopFraction) fail("selection", "segmentation selects per class");
  } else if (augmentation == Augmentation::ScaleCropFlip) {
    fail("augmentation", "scale-crop-flip is for segmentation");
  }
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const Field* field = find_field(key);
  if (!field) throw ConfigError(fmt::format("unknown key '{}'", key));
  field->set(config, key, value);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    }
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += fmt::format("{} = {}\n", name, field.get(config));
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  const auto text = serialize_config(config);
  return pseudo::sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dmt::train
