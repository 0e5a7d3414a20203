// Copyright 2026 The effv2 Authors.
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

#include "effv2/cli/run_config.hpp"

#include <cstdlib>
#include <iomanip>
#include <sstream>

#include "effv2/arch/serialize.hpp"
#include "effv2/common/error.hpp"

namespace effv2::cli {
namespace {

using nlohmann::json;

// Reads typed fields out of one JSON object, recording problems instead of throwing.
class Section {
 public:
  Section(const json& j, std::string where, std::vector<std::string>& problems)
      : j_(j), where_(std::move(where)), problems_(problems) {
    ok_ = j_.is_object();
    if (!ok_) problems_.push_back(where_ + ": expected an object");
  }

  bool ok() const { return ok_; }

  void allow(const std::set<std::string>& keys) {
    if (ok_) collect_unknown_keys(j_, keys, where_, problems_);
  }

  template <typename T>
  bool get(const char* key, T& out) {
    if (!ok_ || !j_.contains(key)) return false;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return type_error(key, "a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return type_error(key, "an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          return type_error(key, "a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return type_error(key, "a number");
    } else {
      if (!v.is_string()) return type_error(key, "a string");
    }
    out = v.get<T>();
    return true;
  }

  bool get_path(const char* key, std::filesystem::path& out) {
    std::string s;
    if (!get(key, s)) return false;
    out = s;
    return true;
  }

  std::optional<Section> sub(const char* key) {
    if (!ok_ || !j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), where_ + "." + key, problems_);
  }

  const std::string& where() const { return where_; }
  void problem(const std::string& p) { problems_.push_back(where_ + ": " + p); }

 private:
  bool type_error(const char* key, const char* expected) {
    problems_.push_back(where_ + ": '" + key + "' must be " + expected);
    return false;
  }

  const json& j_;
  std::string where_;
  std::vector<std::string>& problems_;
  bool ok_ = false;
};

void read_regs(Section s, schedule::Regularization& r) {
  s.allow({"dropout", "randaug", "mixup"});
  s.get("dropout", r.dropout);
  s.get("randaug", r.randaug);
  s.get("mixup", r.mixup);
}

json regs_json(const schedule::Regularization& r) {
  return {{"dropout", r.dropout}, {"randaug", r.randaug}, {"mixup", r.mixup}};
}

std::string lr_decay_name(train::LrDecay d) { return d == train::LrDecay::kCosine ? "cosine" : "staircase"; }

void throw_problems(const std::vector<std::string>& problems, const std::string& what) {
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << problems.size() << " problem(s) in " << what << ":";
  for (const auto& p : problems) msg << "\n  - " << p;
  throw ValidationError(msg.str());
}

// Splits a nested multi-line validation message into one problem per line.
void absorb(const std::string& message, const std::string& prefix, std::vector<std::string>& problems) {
  std::istringstream in(message);
  std::string line;
  std::getline(in, line);
  bool any = false;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" -");
    if (start == std::string::npos) continue;
    problems.push_back(prefix + line.substr(start));
    any = true;
  }
  if (!any) problems.push_back(prefix + message);
}

bool is_preset(const std::string& name) {
  for (const auto& p : arch::preset_names()) {
    if (p == name) return true;
  }
  return false;
}

void check(const RunConfig& c, std::vector<std::string>& problems) {
  if (!is_preset(c.arch)) {
    if (!std::filesystem::exists(c.arch)) {
      problems.push_back("arch: '" + c.arch + "' is neither a preset nor an existing file");
    } else {
      try {
        arch::load_arch(c.arch);
      } catch (const std::exception& e) {
        problems.push_back("arch: " + std::string(e.what()));
      }
    }
  }
  if (c.output_dir.empty()) problems.push_back("output_dir must not be empty");
  const auto& d = c.dataset;
  if (d.kind == "cifar10") {
    if (d.path.empty()) {
      problems.push_back("dataset.path is required for cifar10");
    } else {
      for (const char* f : {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
                            "data_batch_5.bin", "test_batch.bin"}) {
        if (!std::filesystem::exists(d.path / f)) problems.push_back("dataset.path: missing " + (d.path / f).string());
      }
    }
    if (d.num_classes != 10) problems.push_back("dataset.num_classes must be 10 for cifar10");
  } else if (d.kind == "synthetic") {
    if (d.synthetic_train < 2) problems.push_back("dataset.synthetic_train must be >= 2");
    if (d.num_classes < 2) problems.push_back("dataset.num_classes must be >= 2");
  } else {
    problems.push_back("dataset.kind must be 'synthetic' or 'cifar10', got '" + d.kind + "'");
  }
  if (!(d.minival_fraction > 0.0 && d.minival_fraction < 1.0)) problems.push_back("dataset.minival_fraction must be in (0, 1)");
  if (c.checkpoint_every_steps < 0) problems.push_back("checkpoint_every_steps must be >= 0");
  try {
    train::validate(c.train);
  } catch (const ValidationError& e) {
    absorb(e.what(), "train: ", problems);
  }
  if (c.nas.budget < 1) problems.push_back("nas.budget must be >= 1");
  if (c.nas.space != "tiny" && c.nas.space != "around") problems.push_back("nas.space must be 'tiny' or 'around'");
  if (c.nas.layer_delta < 0) problems.push_back("nas.layer_delta must be >= 0");
  try {
    nas::validate(c.nas.eval);
  } catch (const ValidationError& e) {
    absorb(e.what(), "nas: ", problems);
  }
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  const char* env = std::getenv(kOutputDirEnv);
  c.output_dir = env && *env ? std::filesystem::path(env) : std::filesystem::path(kDefaultOutputDir);
  return c;
}

RunConfig parse_run_config(const json& j, RunConfig c) {
  std::vector<std::string> problems;
  Section root(j, "config", problems);
  root.allow({"arch", "output_dir", "seed", "dataset", "train", "schedule", "augment", "nas", "checkpoint_every_steps"});
  root.get("arch", c.arch);
  root.get_path("output_dir", c.output_dir);
  root.get("seed", c.seed);
  root.get("checkpoint_every_steps", c.checkpoint_every_steps);

  if (auto d = root.sub("dataset")) {
    d->allow({"kind", "path", "synthetic_train", "synthetic_eval", "num_classes", "minival_fraction", "train_limit",
              "eval_limit"});
    d->get("kind", c.dataset.kind);
    d->get_path("path", c.dataset.path);
    d->get("synthetic_train", c.dataset.synthetic_train);
    d->get("synthetic_eval", c.dataset.synthetic_eval);
    d->get("num_classes", c.dataset.num_classes);
    d->get("minival_fraction", c.dataset.minival_fraction);
    d->get("train_limit", c.dataset.train_limit);
    d->get("eval_limit", c.dataset.eval_limit);
  }

  auto& t = c.train;
  if (auto s = root.sub("train")) {
    s->allow({"epochs", "batch_size", "steps_per_epoch", "rmsprop_decay", "momentum", "rmsprop_epsilon", "bn_momentum",
              "weight_decay", "lr_reference", "lr_reference_batch", "lr_decay", "lr_decay_factor",
              "lr_decay_every_epochs", "warmup_epochs", "ema_decay", "survival_prob", "schedule_mode",
              "resample_every_epochs", "eval_every_epochs", "eval_image_size", "eval_ema", "eval_batch_size",
              "early_stopping", "patience"});
    s->get("epochs", t.epochs);
    s->get("batch_size", t.batch_size);
    s->get("steps_per_epoch", t.steps_per_epoch);
    s->get("rmsprop_decay", t.rmsprop_decay);
    s->get("momentum", t.momentum);
    s->get("rmsprop_epsilon", t.rmsprop_epsilon);
    s->get("bn_momentum", t.bn_momentum);
    s->get("weight_decay", t.weight_decay);
    s->get("lr_reference", t.lr_reference);
    s->get("lr_reference_batch", t.lr_reference_batch);
    std::string decay;
    if (s->get("lr_decay", decay)) {
      if (decay == "staircase") t.lr_decay = train::LrDecay::kStaircase;
      else if (decay == "cosine") t.lr_decay = train::LrDecay::kCosine;
      else s->problem("'lr_decay' must be 'staircase' or 'cosine'");
    }
    s->get("lr_decay_factor", t.lr_decay_factor);
    s->get("lr_decay_every_epochs", t.lr_decay_every_epochs);
    s->get("warmup_epochs", t.warmup_epochs);
    s->get("ema_decay", t.ema_decay);
    s->get("survival_prob", t.survival_prob);
    std::string mode;
    if (s->get("schedule_mode", mode)) {
      try {
        t.schedule_mode = train::schedule_mode_from_string(mode);
      } catch (const ValidationError& e) {
        s->problem(e.what());
      }
    }
    s->get("resample_every_epochs", t.resample_every_epochs);
    s->get("eval_every_epochs", t.eval_every_epochs);
    s->get("eval_image_size", t.eval_image_size);
    s->get("eval_ema", t.eval_ema);
    s->get("eval_batch_size", t.eval_batch_size);
    s->get("early_stopping", t.early_stopping);
    s->get("patience", t.patience);
  }

  if (auto s = root.sub("schedule")) {
    s->allow({"preset", "num_stages", "size_min", "size_max", "reg_min", "reg_max"});
    std::string preset;
    int stages = t.schedule.num_stages;
    s->get("num_stages", stages);
    if (s->get("preset", preset)) {
      try {
        t.schedule = schedule::preset_schedule(preset, std::max(1, stages), std::max(1, stages));
      } catch (const ValidationError& e) {
        s->problem(e.what());
      }
    }
    t.schedule.num_stages = stages;
    s->get("size_min", t.schedule.size_min);
    s->get("size_max", t.schedule.size_max);
    if (auto r = s->sub("reg_min")) read_regs(*r, t.schedule.reg_min);
    if (auto r = s->sub("reg_max")) read_regs(*r, t.schedule.reg_max);
  }

  if (auto s = root.sub("augment")) {
    s->allow({"randaug_num_ops", "cutout_size"});
    s->get("randaug_num_ops", t.randaug_num_ops);
    s->get("cutout_size", t.cutout_size);
  }

  if (auto s = root.sub("nas")) {
    auto& n = c.nas;
    s->allow({"budget", "space", "layer_delta", "epochs", "image_size", "timing_image_size", "timing_batch_size",
              "timing_warmup", "timing_repeats", "memory_budget_mb"});
    s->get("budget", n.budget);
    s->get("space", n.space);
    s->get("layer_delta", n.layer_delta);
    s->get("epochs", n.eval.epochs);
    s->get("image_size", n.eval.image_size);
    s->get("timing_image_size", n.eval.timing.image_size);
    s->get("timing_batch_size", n.eval.timing.batch_size);
    s->get("timing_warmup", n.eval.timing.warmup);
    s->get("timing_repeats", n.eval.timing.repeats);
    std::int64_t mb = n.eval.timing.memory_budget_bytes >> 20;
    if (s->get("memory_budget_mb", mb)) n.eval.timing.memory_budget_bytes = mb << 20;
  }

  c.train.seed = c.seed;
  check(c, problems);
  throw_problems(problems, "run config");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path));
}

void validate(const RunConfig& cfg) {
  std::vector<std::string> problems;
  check(cfg, problems);
  throw_problems(problems, "run config");
}

json to_json(const RunConfig& c) {
  const auto& t = c.train;
  const auto& n = c.nas;
  return json{
      {"arch", c.arch},
      {"output_dir", c.output_dir.string()},
      {"seed", c.seed},
      {"checkpoint_every_steps", c.checkpoint_every_steps},
      {"dataset",
       {{"kind", c.dataset.kind},
        {"path", c.dataset.path.string()},
        {"synthetic_train", c.dataset.synthetic_train},
        {"synthetic_eval", c.dataset.synthetic_eval},
        {"num_classes", c.dataset.num_classes},
        {"minival_fraction", c.dataset.minival_fraction},
        {"train_limit", c.dataset.train_limit},
        {"eval_limit", c.dataset.eval_limit}}},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"steps_per_epoch", t.steps_per_epoch},
        {"rmsprop_decay", t.rmsprop_decay},
        {"momentum", t.momentum},
        {"rmsprop_epsilon", t.rmsprop_epsilon},
        {"bn_momentum", t.bn_momentum},
        {"weight_decay", t.weight_decay},
        {"lr_reference", t.lr_reference},
        {"lr_reference_batch", t.lr_reference_batch},
        {"lr_decay", lr_decay_name(t.lr_decay)},
        {"lr_decay_factor", t.lr_decay_factor},
        {"lr_decay_every_epochs", t.lr_decay_every_epochs},
        {"warmup_epochs", t.warmup_epochs},
        {"ema_decay", t.ema_decay},
        {"survival_prob", t.survival_prob},
        {"schedule_mode", train::to_string(t.schedule_mode)},
        {"resample_every_epochs", t.resample_every_epochs},
        {"eval_every_epochs", t.eval_every_epochs},
        {"eval_image_size", t.eval_image_size},
        {"eval_ema", t.eval_ema},
        {"eval_batch_size", t.eval_batch_size},
        {"early_stopping", t.early_stopping},
        {"patience", t.patience}}},
      {"schedule",
       {{"num_stages", t.schedule.num_stages},
        {"size_min", t.schedule.size_min},
        {"size_max", t.schedule.size_max},
        {"reg_min", regs_json(t.schedule.reg_min)},
        {"reg_max", regs_json(t.schedule.reg_max)}}},
      {"augment", {{"randaug_num_ops", t.randaug_num_ops}, {"cutout_size", t.cutout_size}}},
      {"nas",
       {{"budget", n.budget},
        {"space", n.space},
        {"layer_delta", n.layer_delta},
        {"epochs", n.eval.epochs},
        {"image_size", n.eval.image_size},
        {"timing_image_size", n.eval.timing.image_size},
        {"timing_batch_size", n.eval.timing.batch_size},
        {"timing_warmup", n.eval.timing.warmup},
        {"timing_repeats", n.eval.timing.repeats},
        {"memory_budget_mb", n.eval.timing.memory_budget_bytes >> 20}}}};
}

LoadedData load_data(const DatasetConfig& cfg, std::uint64_t seed) {
  LoadedData out;
  if (cfg.kind == "cifar10") {
    auto c = data::load_cifar10(cfg.path, seed);
    out.train = std::move(c.train);
    out.minival = std::move(c.minival);
    out.eval = std::move(c.eval);
  } else {
    const Philox root(seed, 0x64617461);
    const auto pool = data::synthetic_dataset(cfg.num_classes, cfg.synthetic_train, 32, root.derive(0));
    auto split = data::split_minival(pool, cfg.minival_fraction, root.derive(1));
    out.train = std::move(split.train);
    out.minival = std::move(split.minival);
    if (cfg.synthetic_eval > 0) out.eval = data::synthetic_dataset(cfg.num_classes, cfg.synthetic_eval, 32, root.derive(2));
  }
  auto limit = [](data::Dataset& ds, std::size_t n) {
    if (n == 0 || n >= ds.size()) return;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    ds = ds.subset(idx, ds.split);
  };
  limit(out.train, cfg.train_limit);
  limit(out.eval, cfg.eval_limit);
  return out;
}

std::string format_stage_table(const arch::ArchSpec& a) {
  std::ostringstream o;
  o << a.name << " (" << a.num_classes << " classes, default size " << a.default_image_size << ")\n";
  o << std::left << std::setw(7) << "Stage" << std::setw(24) << "Operator" << std::right << std::setw(8) << "Stride"
    << std::setw(12) << "#Channels" << std::setw(10) << "#Layers" << "\n";
  auto row = [&](const std::string& stage, const std::string& op, int stride, int channels, int layers) {
    o << std::left << std::setw(7) << stage << std::setw(24) << op << std::right << std::setw(8) << stride
      << std::setw(12) << channels << std::setw(10) << layers << "\n";
  };
  row("0", "Conv" + std::to_string(a.stem.kernel) + "x" + std::to_string(a.stem.kernel), a.stem.stride,
      a.stem.out_channels, 1);
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    const auto& b = a.stages[i];
    std::string op = b.op == arch::OpType::kFusedMBConv ? "Fused-MBConv" : "MBConv";
    op += std::to_string(b.expansion) + ", k" + std::to_string(b.kernel) + "x" + std::to_string(b.kernel);
    if (b.se_ratio > 0.0) {
      std::ostringstream se;
      se << b.se_ratio;
      op += ", SE" + se.str();
    }
    row(std::to_string(i + 1), op, b.stride, b.out_channels, b.num_layers);
  }
  row(std::to_string(a.stages.size() + 1), "Conv1x1 & Pooling & FC", 1, a.head.out_channels, 1);
  return o.str();
}

std::string format_cost_report(const arch::CostReport& r) {
  std::ostringstream o;
  const bool flops = r.image_size > 0;
  auto row = [&](const std::string& name, auto params, auto macs) {
    o << std::left << std::setw(10) << name << std::right << std::setw(14) << params;
    if (flops) o << std::setw(18) << macs;
    o << "\n";
  };
  row("Stage", "Params", "FLOPs (MAC)");
  for (const auto& s : r.per_stage) row(s.name, s.params, s.flops);
  row("total", r.params, r.flops);
  o << std::fixed << std::setprecision(2) << "params " << r.params / 1e6 << "M";
  if (r.image_size > 0) o << ", FLOPs " << r.flops / 1e9 << "B at " << r.image_size << "x" << r.image_size;
  o << "\n";
  return o.str();
}

json cost_report_json(const arch::CostReport& r) {
  json stages = json::array();
  for (const auto& s : r.per_stage) {
    stages.push_back({{"name", s.name}, {"params", s.params}, {"flops", s.flops}, {"out_channels", s.out_channels},
                      {"out_size", s.out_size}});
  }
  return {{"image_size", r.image_size}, {"params", r.params}, {"flops", r.flops}, {"per_stage", stages}};
}

}  // namespace effv2::cli
