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

// effv2: inspect, count, schedule, train, nas and export from one binary.
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "effv2/arch/cost.hpp"
#include "effv2/arch/model.hpp"
#include "effv2/arch/serialize.hpp"
#include "effv2/cli/run_config.hpp"
#include "effv2/common/error.hpp"
#include "effv2/nas/search.hpp"
#include "effv2/schedule/schedule.hpp"
#include "effv2/train/trainer.hpp"

namespace {

using namespace effv2;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  std::string config;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
};

cli::RunConfig resolve_config(const Overrides& o) {
  cli::RunConfig cfg = o.config.empty() ? cli::default_run_config() : cli::load_run_config(o.config);
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.epochs) cfg.train.epochs = *o.epochs;
  cli::validate(cfg);
  return cfg;
}

std::filesystem::path prepare_output(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path under(const std::filesystem::path& dir, const std::string& name) {
  const std::filesystem::path p(name);
  return p.is_absolute() ? p : dir / p;
}

std::string output_dir_default() { return cli::default_run_config().output_dir.string(); }

int cmd_inspect(const std::string& arch_name, bool as_json, const std::string& save, const std::string& out_dir) {
  const auto a = arch::resolve_arch(arch_name);
  if (as_json) {
    std::cout << arch::dump_arch(a);
  } else {
    std::cout << cli::format_stage_table(a);
  }
  if (!save.empty()) {
    const auto path = under(prepare_output(out_dir.empty() ? output_dir_default() : out_dir), save);
    arch::save_arch(a, path);
    std::cerr << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_count(const std::string& arch_name, int image_size, bool as_json) {
  const auto a = arch::resolve_arch(arch_name);
  const auto r = image_size > 0 ? arch::count_flops(a, image_size) : arch::count_params(a);
  if (as_json) {
    std::cout << cli::cost_report_json(r).dump(2) << "\n";
  } else {
    std::cout << a.name << "\n" << cli::format_cost_report(r);
  }
  return kExitOk;
}

int cmd_schedule(const Overrides& o, const std::string& preset, int stages, std::int64_t total_steps,
                 const std::string& mode, bool as_json) {
  std::vector<schedule::StagePlan> plans;
  if (!o.config.empty()) {
    auto cfg = resolve_config(o);
    if (!mode.empty()) cfg.train.schedule_mode = train::schedule_mode_from_string(mode);
    std::int64_t spe = cfg.train.steps_per_epoch;
    if (spe == 0) spe = train::resolve_steps_per_epoch(cfg.train, cli::load_data(cfg.dataset, cfg.seed).train.size());
    plans = train::resolve_plans(cfg.train, spe);
  } else {
    const auto s = schedule::preset_schedule(preset, total_steps, stages);
    const auto m = mode.empty() ? train::ScheduleMode::kProgressiveAdaptive : train::schedule_mode_from_string(mode);
    if (m == train::ScheduleMode::kProgressiveAdaptive) {
      plans = schedule::make_schedule(s);
    } else if (m == train::ScheduleMode::kProgressiveVanilla) {
      plans = schedule::vanilla_progressive(s);
    } else {
      throw ValidationError("--mode " + mode + " needs --config (it depends on the epoch structure)");
    }
  }
  if (as_json) {
    json arr = json::array();
    for (const auto& p : plans) {
      arr.push_back({{"stage", p.stage_index},
                     {"image_size", p.image_size},
                     {"dropout", p.regs.dropout},
                     {"randaug", p.regs.randaug},
                     {"mixup", p.regs.mixup},
                     {"steps", p.steps}});
    }
    std::cout << arr.dump(2) << "\n";
  } else {
    std::cout << schedule::format_plan_table(plans);
  }
  return kExitOk;
}

int cmd_train(const Overrides& o, bool resume, std::optional<std::int64_t> stop_at) {
  const auto cfg = resolve_config(o);
  const auto dir = prepare_output(cfg.output_dir);
  auto data = cli::load_data(cfg.dataset, cfg.seed);
  auto spec = arch::resolve_arch(cfg.arch);
  spec.num_classes = data.train.num_classes;
  arch::validate(spec);
  arch::save_arch(spec, dir / "arch.json");
  write_text_file_atomic(dir / "config.json", cli::to_json(cfg).dump(2) + "\n");

  Philox init = Philox(cfg.seed, 0).derive(0x696e6974);
  auto model = arch::Model::instantiate(spec, init);
  train::TrainData td{&data.train, &data.minival, data.eval.size() > 0 ? &data.eval : nullptr, {}};
  train::Trainer trainer(model, cfg.train, td);
  trainer.checkpoint_path = dir / "checkpoint.ckpt";
  trainer.checkpoint_every_steps = cfg.checkpoint_every_steps;
  trainer.on_stage_start = [&](const train::StageEvent& e) {
    const auto& p = trainer.plans()[static_cast<std::size_t>(e.stage)];
    std::cout << "stage " << e.stage << " from step " << e.step << ": size " << p.image_size << ", dropout "
              << p.regs.dropout << ", randaug " << p.regs.randaug << ", mixup " << p.regs.mixup << std::endl;
  };

  train::Metrics metrics;
  const auto csv = dir / "metrics.csv";
  if (resume && std::filesystem::exists(trainer.checkpoint_path)) {
    trainer.load(trainer.checkpoint_path);
    if (std::filesystem::exists(csv)) {
      for (const auto& r : train::Metrics::read_csv(csv).rows) {
        if (r.step < trainer.step()) metrics.rows.push_back(r);
      }
    }
    std::cout << "resumed at step " << trainer.step() << " of " << trainer.total_steps() << std::endl;
  }
  const auto fresh = trainer.run(stop_at);
  metrics.rows.insert(metrics.rows.end(), fresh.rows.begin(), fresh.rows.end());
  metrics.early_stopped = fresh.early_stopped;
  metrics.write_csv(csv);
  if (!trainer.finished()) trainer.save(trainer.checkpoint_path);

  std::cout << "steps " << trainer.step() << "/" << trainer.total_steps() << ", train time "
            << metrics.total_time_s() << " s";
  if (auto a = metrics.final_minival_acc()) std::cout << ", minival " << *a;
  if (auto a = metrics.final_minival_acc_ema()) std::cout << ", minival (EMA) " << *a;
  if (auto a = metrics.final_eval_acc()) std::cout << ", eval " << *a;
  if (metrics.early_stopped) std::cout << ", early stopped";
  std::cout << "\nwrote " << csv.string() << "\n";
  return kExitOk;
}

int cmd_nas(const Overrides& o, std::optional<std::int64_t> budget, std::optional<int> image_size) {
  auto cfg = resolve_config(o);
  if (budget) cfg.nas.budget = *budget;
  if (o.epochs) cfg.nas.eval.epochs = *o.epochs;
  if (image_size) cfg.nas.eval.image_size = cfg.nas.eval.timing.image_size = *image_size;
  cli::validate(cfg);
  const auto dir = prepare_output(cfg.output_dir);
  auto data = cli::load_data(cfg.dataset, cfg.seed);
  write_text_file_atomic(dir / "config.json", cli::to_json(cfg).dump(2) + "\n");

  auto backbone = arch::resolve_arch(cfg.arch);
  backbone.num_classes = data.train.num_classes;
  nas::SearchSpace space = cfg.nas.space == "tiny" ? nas::SearchSpace::tiny(backbone.num_classes)
                                                   : nas::SearchSpace::around(backbone, cfg.nas.layer_delta);
  nas::SearchConfig sc;
  sc.budget = cfg.nas.budget;
  sc.seed = cfg.seed;
  sc.eval = cfg.nas.eval;
  sc.eval.train = cfg.train;
  sc.trace_path = dir / "trace.jsonl";
  const auto result = nas::random_search(space, {&data.train, &data.minival, nullptr, {}}, sc);

  json front = json::array();
  for (const auto& c : result.pareto) front.push_back(nas::to_json(c, result.reward));
  write_text_file_atomic(dir / "pareto.json", front.dump(2) + "\n");

  std::cout << "backbone step time " << result.reward.step_time_ref_s << " s, params " << result.reward.params_ref
            << "\n";
  std::cout << "rank  index        A        S        P   reward  flags\n";
  int rank = 0;
  for (const auto& c : result.ranked) {
    std::string flags;
    for (const auto& f : c.flags) flags += (flags.empty() ? "" : ",") + f;
    char line[160];
    std::snprintf(line, sizeof line, "%4d  %5lld  %7.4f  %7.4f  %7.4f  %7.4f  %s\n", ++rank,
                  static_cast<long long>(c.index), c.accuracy, c.step_time, c.params, c.reward, flags.c_str());
    std::cout << line;
  }
  std::cout << "pareto front:";
  for (const auto& c : result.pareto) std::cout << " " << c.index;
  std::cout << "\nwrote " << sc.trace_path.string() << " and " << (dir / "pareto.json").string() << "\n";
  return kExitOk;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int cmd_export(const std::string& input, const std::string& format, const std::string& out, const std::string& out_dir) {
  const auto m = train::Metrics::read_csv(input);
  std::string text;
  if (format == "json") {
    json rows = json::array();
    for (const auto& r : m.rows) {
      rows.push_back({{"step", r.step},
                      {"epoch", r.epoch},
                      {"stage", r.stage},
                      {"image_size", r.image_size},
                      {"dropout", r.dropout},
                      {"randaug", r.randaug},
                      {"mixup", r.mixup},
                      {"lr", r.lr},
                      {"train_loss", r.train_loss},
                      {"minival_acc", opt_json(r.minival_acc)},
                      {"minival_acc_ema", opt_json(r.minival_acc_ema)},
                      {"eval_acc", opt_json(r.eval_acc)},
                      {"step_time_s", r.step_time_s},
                      {"cumulative_time_s", r.cumulative_time_s}});
    }
    text = json{{"rows", rows}, {"total_time_s", m.total_time_s()}}.dump(2) + "\n";
  } else if (format == "csv") {
    text = m.to_csv();
  } else {
    throw ValidationError("--format must be csv or json");
  }
  if (out == "-") {
    std::cout << text;
    return kExitOk;
  }
  const auto name = out.empty() ? std::string("metrics_export.") + format : out;
  const auto path = under(prepare_output(out_dir.empty() ? output_dir_default() : out_dir), name);
  write_text_file_atomic(path, text);
  std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EfficientNetV2 toolkit: architectures, cost analysis, progressive training and NAS"};
  app.require_subcommand(1);
  std::string arch_name, save, out_dir, preset = "v2-s", mode, format = "json", input, out;
  bool as_json = false, resume = false;
  int image_size = 0, stages = 4;
  std::int64_t total_steps = 1000;
  Overrides ov;
  std::optional<std::int64_t> budget, stop_at;
  std::optional<int> nas_size;

  auto* inspect = app.add_subcommand("inspect", "Print the stage table of a preset or arch JSON file");
  inspect->add_option("arch", arch_name, "Preset name or arch JSON path")->required();
  inspect->add_flag("--json", as_json, "Print the arch as JSON instead of a table");
  inspect->add_option("--save", save, "Also write the arch JSON to this file (relative to the output dir)");
  inspect->add_option("--output-dir", out_dir, "Output directory (default: $EFFV2_OUTPUT_DIR or effv2_out)");

  auto* count = app.add_subcommand("count", "Parameter and FLOP (MAC) report");
  count->add_option("arch", arch_name, "Preset name or arch JSON path")->required();
  count->add_option("--image-size", image_size, "Input side for FLOPs; 0 reports params only");
  count->add_flag("--json", as_json, "Print JSON");

  auto* sched = app.add_subcommand("schedule", "Resolve the staged image-size / regularization plan");
  sched->add_option("--config", ov.config, "Run config JSON; uses its train and schedule sections")->check(CLI::ExistingFile);
  sched->add_option("--preset", preset, "Schedule preset (v2-s, v2-m, v2-l, v2-desk)");
  sched->add_option("--stages", stages, "Number of stages");
  sched->add_option("--total-steps", total_steps, "Total training steps (preset mode)");
  sched->add_option("--mode", mode, "progressive_adaptive, progressive_vanilla, fixed, random_resize, random_resize_adaptive");
  sched->add_flag("--json", as_json, "Print JSON");

  auto* trn = app.add_subcommand("train", "Train and write metrics.csv and checkpoint.ckpt");
  trn->add_option("--config", ov.config, "Run config JSON")->check(CLI::ExistingFile);
  trn->add_option("--seed", ov.seed, "Override the seed");
  trn->add_option("--epochs", ov.epochs, "Override train.epochs");
  trn->add_option("--output-dir", ov.output_dir, "Override output_dir");
  trn->add_flag("--resume", resume, "Continue from <output-dir>/checkpoint.ckpt when present");
  trn->add_option("--stop-at-step", stop_at, "Stop before this step, leaving a resumable checkpoint");

  auto* nas_cmd = app.add_subcommand("nas", "Random architecture search with the training-aware reward");
  nas_cmd->add_option("--config", ov.config, "Run config JSON")->check(CLI::ExistingFile);
  nas_cmd->add_option("--budget", budget, "Number of candidates");
  nas_cmd->add_option("--seed", ov.seed, "Search seed");
  nas_cmd->add_option("--epochs", ov.epochs, "Training epochs per candidate");
  nas_cmd->add_option("--image-size", nas_size, "Training and timing image size");
  nas_cmd->add_option("--output-dir", ov.output_dir, "Override output_dir");

  auto* exp = app.add_subcommand("export", "Convert a metrics CSV for plotting");
  exp->add_option("metrics", input, "metrics.csv")->required()->check(CLI::ExistingFile);
  exp->add_option("--format", format, "json or csv");
  exp->add_option("--out", out, "Output file relative to the output dir, or - for stdout");
  exp->add_option("--output-dir", out_dir, "Output directory (default: $EFFV2_OUTPUT_DIR or effv2_out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*inspect) return cmd_inspect(arch_name, as_json, save, out_dir);
    if (*count) return cmd_count(arch_name, image_size, as_json);
    if (*sched) return cmd_schedule(ov, preset, stages, total_steps, mode, as_json);
    if (*trn) return cmd_train(ov, resume, stop_at);
    if (*nas_cmd) return cmd_nas(ov, budget, nas_size);
    if (*exp) return cmd_export(input, format, out, out_dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
