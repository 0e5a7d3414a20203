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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance            run every criterion
//   acceptance 1 3 9      run a subset
//
// Criteria 6, 7 and 10 read CIFAR-10 from EFFV2_CIFAR10_DIR when it is set. Otherwise a
// class-conditional synthetic set is written in the CIFAR-10 binary layout and read back
// through the same loader. Metrics CSVs go under $EFFV2_OUTPUT_DIR/acceptance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "effv2/arch/cost.hpp"
#include "effv2/arch/model.hpp"
#include "effv2/cli/run_config.hpp"
#include "effv2/common/error.hpp"
#include "effv2/data/augment.hpp"
#include "effv2/data/dataset.hpp"
#include "effv2/nas/search.hpp"
#include "effv2/schedule/schedule.hpp"
#include "effv2/train/trainer.hpp"
#include "support/gradient_suite.hpp"

namespace fs = std::filesystem;
using namespace effv2;

namespace {

// Tolerances and budgets. Runtime limits are part of each criterion.
constexpr double kParamRelTol = 0.10;           // criteria 1 and 2
constexpr double kScheduleAbsTol = 5e-3;        // interior plan values quoted to two decimals
constexpr int kRandomSchedules = 1000;
constexpr double kGradRelTol = 1e-4;
constexpr int kGradShapes = 10;
constexpr double kRewardIdentityTol = 1e-12;
constexpr double kRewardPowerTol = 1e-4;
constexpr double kMinSpeedup = 0.25;            // progressive time at least 25% lower
constexpr double kNonInferiorityPoints = 0.5;
constexpr double kStepTimeRelTol = 0.20;
constexpr double kMixupMeanTol = 1e-6;
constexpr double kSimplexTol = 1e-6;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<void(Outcome&)> run;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream o;
  o << std::setprecision(precision) << v;
  return o.str();
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

fs::path output_root() {
  const char* env = std::getenv(cli::kOutputDirEnv);
  const fs::path root = env && *env ? fs::path(env) : fs::path(cli::kDefaultOutputDir);
  const fs::path dir = root / "acceptance";
  fs::create_directories(dir);
  return dir;
}

// --- data -------------------------------------------------------------------------------

struct CifarSource {
  fs::path dir;
  bool real = false;
};

const CifarSource& cifar_source() {
  static const CifarSource src = [] {
    CifarSource s;
    if (const char* env = std::getenv("EFFV2_CIFAR10_DIR"); env && *env) {
      s.dir = env;
      s.real = true;
      return s;
    }
    s.dir = output_root() / "synthetic_cifar10";
    if (fs::exists(s.dir / "test_batch.bin") && fs::file_size(s.dir / "test_batch.bin") == data::kCifarFileBytes) {
      return s;
    }
    const Philox root(2026, 0x63696661);
    const auto train = data::synthetic_dataset(10, 50000, 32, root.derive(0));
    const auto eval = data::synthetic_dataset(10, 10000, 32, root.derive(1));
    data::write_cifar10(s.dir, train, eval);
    return s;
  }();
  return src;
}

const data::Cifar10& cifar() {
  static const data::Cifar10 c = data::load_cifar10(cifar_source().dir, 0);
  return c;
}

std::string data_label() { return cifar_source().real ? "CIFAR-10" : "synthetic CIFAR-10 layout"; }

// --- 1 ----------------------------------------------------------------------------------

void fused_b4(Outcome& out) {
  const std::vector<std::string> rows = {"b4", "b4-fused1-3", "b4-fused1-5", "b4-fused1-7"};
  const double params_m[] = {19.3, 20.0, 43.4, 132.0};
  const double ratios[] = {1.00, 1.036, 2.249, 6.839};
  std::vector<arch::CostReport> reports;
  for (const auto& r : rows) reports.push_back(arch::count_flops(arch::preset(r), 380));
  const double base = static_cast<double>(reports[0].params);
  std::string p, f;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double pm = reports[i].params / 1e6;
    out.check(within(pm, params_m[i], kParamRelTol), rows[i] + " params " + fmt(pm) + "M vs " + fmt(params_m[i]));
    out.check(within(reports[i].params / base, ratios[i], kParamRelTol),
              rows[i] + " ratio " + fmt(reports[i].params / base) + " vs " + fmt(ratios[i]));
    if (i > 0) out.check(reports[i].flops > reports[i - 1].flops, rows[i] + " FLOPs not above previous row");
    p += (i ? "/" : "") + fmt(pm, 3);
    f += (i ? "/" : "") + fmt(reports[i].flops / 1e9, 3);
  }
  out.note("params " + p + " M, MACs " + f + " B at 380");
}

// --- 2 ----------------------------------------------------------------------------------

void v2_s_static(Outcome& out) {
  using arch::OpType;
  const arch::ArchSpec a = arch::efficientnetv2_s();
  struct Row {
    OpType op;
    int expansion, kernel, stride, channels, layers;
    double se;
  };
  const Row table[] = {
      {OpType::kFusedMBConv, 1, 3, 1, 24, 2, 0.0},   {OpType::kFusedMBConv, 4, 3, 2, 48, 4, 0.0},
      {OpType::kFusedMBConv, 4, 3, 2, 64, 4, 0.0},   {OpType::kMBConv, 4, 3, 2, 128, 6, 0.25},
      {OpType::kMBConv, 6, 3, 1, 160, 9, 0.25},      {OpType::kMBConv, 6, 3, 2, 256, 15, 0.25},
  };
  out.check(a.stem.kernel == 3 && a.stem.stride == 2 && a.stem.out_channels == 24 && a.stem.num_layers == 1,
            "stem is not Conv3x3/2/24");
  out.check(a.stages.size() == std::size(table), "stage count " + std::to_string(a.stages.size()));
  for (std::size_t i = 0; i < std::min(a.stages.size(), std::size(table)); ++i) {
    const auto& s = a.stages[i];
    const auto& t = table[i];
    out.check(s.op == t.op && s.expansion == t.expansion && s.kernel == t.kernel && s.stride == t.stride &&
                  s.out_channels == t.channels && s.num_layers == t.layers && s.se_ratio == t.se,
              "stage " + std::to_string(i + 1) + " differs");
  }
  out.check(a.head.out_channels == 1280, "head channels " + std::to_string(a.head.out_channels));

  const auto r = arch::count_flops(a, 384);
  out.check(r.params >= 21'000'000 && r.params <= 25'000'000, "params " + fmt(r.params / 1e6) + "M");
  out.check(r.flops >= 7'500'000'000LL && r.flops <= 10'100'000'000LL, "MACs " + fmt(r.flops / 1e9) + "B");
  std::string v1;
  const std::pair<int, double> baselines[] = {{4, 19e6}, {6, 43e6}, {7, 66e6}};
  for (const auto& [variant, target] : baselines) {
    const double p = arch::count_params(arch::efficientnet_v1(variant)).params;
    out.check(within(p, target, kParamRelTol), "B" + std::to_string(variant) + " params " + fmt(p / 1e6) + "M");
    v1 += " B" + std::to_string(variant) + "=" + fmt(p / 1e6, 3) + "M";
  }
  out.note("V2-S " + fmt(r.params / 1e6, 3) + "M params, " + fmt(r.flops / 1e9, 3) + "B MACs at 384;" + v1);
}

// --- 3 ----------------------------------------------------------------------------------

void schedule_exact(Outcome& out) {
  const auto cfg = schedule::preset_schedule("v2-s", 1000, 4);
  const auto plans = schedule::make_schedule(cfg);
  const int sizes[] = {128, 184, 240, 300};
  const double gamma[] = {0.1, 0.1667, 0.2333, 0.3};
  const double eps[] = {5, 8.33, 11.67, 15};
  out.check(plans.size() == 4, "plan count " + std::to_string(plans.size()));
  for (std::size_t i = 0; i < std::min<std::size_t>(plans.size(), 4); ++i) {
    const auto& p = plans[i];
    const bool endpoint = i == 0 || i == 3;
    const double tol = endpoint ? 0.0 : kScheduleAbsTol;
    const bool ok = p.image_size == sizes[i] && std::abs(p.regs.dropout - gamma[i]) <= tol &&
                    std::abs(p.regs.randaug - eps[i]) <= tol && p.regs.mixup == 0.0;
    out.check(ok, "stage " + std::to_string(i) + " = (" + std::to_string(p.image_size) + ", " + fmt(p.regs.dropout) +
                      ", " + fmt(p.regs.randaug) + ", " + fmt(p.regs.mixup) + ")");
  }

  Philox rng(0x616c67);
  int violations = 0;
  for (int t = 0; t < kRandomSchedules; ++t) {
    schedule::StageSchedule c;
    c.total_steps = 1 + static_cast<std::int64_t>(rng.below(10000));
    c.num_stages = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(10, c.total_steps)));
    c.size_min = 32 + static_cast<int>(rng.below(300));
    c.size_max = c.size_min + static_cast<int>(rng.below(300));
    auto range = [&](double hi, double& lo_out, double& hi_out) {
      const double a = rng.uniform(0.0, hi), b = rng.uniform(0.0, hi);
      lo_out = std::min(a, b);
      hi_out = std::max(a, b);
    };
    range(0.9, c.reg_min.dropout, c.reg_max.dropout);
    range(30.0, c.reg_min.randaug, c.reg_max.randaug);
    range(1.0, c.reg_min.mixup, c.reg_max.mixup);
    const auto ps = schedule::make_schedule(c);
    bool ok = ps.size() == static_cast<std::size_t>(c.num_stages) && ps.back().image_size == c.size_max &&
              ps.back().regs == c.reg_max;
    if (c.num_stages > 1) ok = ok && ps.front().image_size == c.size_min && ps.front().regs == c.reg_min;
    std::int64_t steps = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      steps += ps[i].steps;
      if (i == 0) continue;
      ok = ok && ps[i].image_size >= ps[i - 1].image_size && ps[i].regs.dropout >= ps[i - 1].regs.dropout &&
           ps[i].regs.randaug >= ps[i - 1].regs.randaug && ps[i].regs.mixup >= ps[i - 1].regs.mixup;
    }
    ok = ok && steps == c.total_steps;
    if (!ok) ++violations;
  }
  out.check(violations == 0, std::to_string(violations) + " randomized configs broke endpoints or monotonicity");
  out.note(std::to_string(kRandomSchedules) + " randomized configs checked");
}

// --- 4 ----------------------------------------------------------------------------------

void gradients(Outcome& out) {
  const auto reports = testing::run_gradient_suite(0x67726164, kGradShapes);
  double worst = 0.0;
  std::string worst_op;
  for (const auto& r : reports) {
    out.check(r.shapes >= kGradShapes, r.op + " checked on " + std::to_string(r.shapes) + " shapes");
    out.check(r.max_rel_error < kGradRelTol, r.op + " rel error " + fmt(r.max_rel_error));
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_op = r.op;
    }
  }
  out.note(std::to_string(reports.size()) + " ops x " + std::to_string(kGradShapes) + " shapes, worst " +
           fmt(worst, 3) + " (" + worst_op + ")");
}

// --- 5 ----------------------------------------------------------------------------------

void reward_fn(Outcome& out) {
  double worst_identity = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double a = i / 100.0;
    worst_identity = std::max(worst_identity, std::abs(nas::reward(a, 1.0, 1.0) - a));
  }
  out.check(worst_identity <= kRewardIdentityTol, "reward(A,1,1) off by " + fmt(worst_identity));

  constexpr int n = 10;  // 10 x 10 x 10 grid
  auto axis = [](int i, double lo, double hi) { return lo + (hi - lo) * i / (n - 1); };
  int broken = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double a = axis(i, 0.05, 1.0), s = axis(j, 0.25, 4.0), p = axis(k, 0.25, 4.0);
        const double r = nas::reward(a, s, p);
        if (i + 1 < n && !(nas::reward(axis(i + 1, 0.05, 1.0), s, p) > r)) ++broken;
        if (j + 1 < n && !(nas::reward(a, axis(j + 1, 0.25, 4.0), p) < r)) ++broken;
        if (k + 1 < n && !(nas::reward(a, s, axis(k + 1, 0.25, 4.0)) < r)) ++broken;
      }
  out.check(broken == 0, std::to_string(broken) + " grid neighbours not strictly ordered");

  const double r1 = nas::reward(0.8, 2.0, 1.0), r2 = nas::reward(0.8, 1.0, 2.0);
  out.check(std::abs(r1 - 0.7621) <= kRewardPowerTol, "reward(0.8,2,1) = " + fmt(r1, 8));
  out.check(std::abs(r2 - 0.7727) <= kRewardPowerTol, "reward(0.8,1,2) = " + fmt(r2, 8));
  out.note("reward(0.8,2,1)=" + fmt(r1, 6) + ", reward(0.8,1,2)=" + fmt(r2, 6));
}

// --- 6 and 7 ----------------------------------------------------------------------------

train::TrainConfig desk_run(std::uint64_t seed, train::ScheduleMode mode, int epochs, std::int64_t steps_per_epoch) {
  train::TrainConfig c = train::desk_config();
  c.seed = seed;
  c.epochs = epochs;
  c.steps_per_epoch = steps_per_epoch;
  c.schedule_mode = mode;
  c.eval_every_epochs = epochs;  // final evaluation only
  c.eval_ema = false;
  return c;
}

train::Metrics run_desk(const train::TrainConfig& cfg, const fs::path& csv) {
  const auto& c = cifar();
  Philox init = Philox(cfg.seed, 0).derive(0x696e6974);
  auto model = arch::Model::instantiate(arch::efficientnetv2_desk(c.train.num_classes), init);
  train::Trainer trainer(model, cfg, {&c.train, &c.minival, nullptr, {}});
  auto m = trainer.run();
  if (!csv.empty()) m.write_csv(csv);
  return m;
}

void progressive_speed(Outcome& out) {
  constexpr int kEpochs = 4;
  constexpr std::int64_t kStepsPerEpoch = 30;
  const auto params = arch::count_params(arch::efficientnetv2_desk()).params;
  out.check(params <= 1'000'000, "desk model has " + std::to_string(params) + " params");

  auto fixed_cfg = desk_run(0, train::ScheduleMode::kFixed, kEpochs, kStepsPerEpoch);
  fixed_cfg.schedule.size_min = fixed_cfg.schedule.size_max;  // fixed at the final size
  const auto prog_cfg = desk_run(0, train::ScheduleMode::kProgressiveAdaptive, kEpochs, kStepsPerEpoch);
  const auto dir = output_root() / "progressive_speed";
  fs::create_directories(dir);
  const auto fixed = run_desk(fixed_cfg, dir / "fixed.csv");
  const auto prog = run_desk(prog_cfg, dir / "progressive.csv");

  out.check(fixed.rows.size() == prog.rows.size(), "step counts differ");
  const double saving = 1.0 - prog.total_time_s() / fixed.total_time_s();
  out.check(saving >= kMinSpeedup, "progressive saves only " + fmt(100 * saving, 3) + "%");
  std::set<int> sizes;
  for (const auto& r : prog.rows) sizes.insert(r.image_size);
  out.note(std::to_string(prog.rows.size()) + " steps each on " + data_label() + ": fixed-" +
           std::to_string(fixed.rows.front().image_size) + " " + fmt(fixed.total_time_s(), 4) + " s, progressive " +
           std::to_string(*sizes.begin()) + "->" + std::to_string(*sizes.rbegin()) + " " +
           fmt(prog.total_time_s(), 4) + " s, " + fmt(100 * saving, 3) + "% lower");
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void adaptive_ablation(Outcome& out) {
  constexpr int kEpochs = 4;
  constexpr std::int64_t kStepsPerEpoch = 50;
  const std::uint64_t seeds[] = {1, 2, 3};
  const auto dir = output_root() / "adaptive_ablation";
  fs::create_directories(dir);
  std::vector<double> adaptive, vanilla;
  std::string detail;
  for (std::uint64_t seed : seeds) {
    const auto tag = "seed" + std::to_string(seed);
    const auto a = run_desk(desk_run(seed, train::ScheduleMode::kProgressiveAdaptive, kEpochs, kStepsPerEpoch),
                            dir / (tag + "_adaptive.csv"));
    const auto v = run_desk(desk_run(seed, train::ScheduleMode::kProgressiveVanilla, kEpochs, kStepsPerEpoch),
                            dir / (tag + "_vanilla.csv"));
    out.check(a.final_minival_acc().has_value() && v.final_minival_acc().has_value(), tag + " missing accuracy");
    adaptive.push_back(100.0 * a.final_minival_acc().value_or(0.0));
    vanilla.push_back(100.0 * v.final_minival_acc().value_or(0.0));
    detail += " " + tag + " " + fmt(adaptive.back(), 4) + "/" + fmt(vanilla.back(), 4);
  }
  const double ma = median3(adaptive), mv = median3(vanilla);
  out.check(ma >= mv - kNonInferiorityPoints, "median adaptive " + fmt(ma) + " < vanilla " + fmt(mv) + " - 0.5");
  out.note("median minival top-1 adaptive " + fmt(ma, 4) + "% vs vanilla " + fmt(mv, 4) + "% on " + data_label() +
           " (adaptive/vanilla:" + detail + "); CSVs in " + dir.string());
}

// --- 8 ----------------------------------------------------------------------------------

void nas_end_to_end(Outcome& out) {
  const Philox root(8, 0x6e6173);
  const auto pool = data::synthetic_dataset(10, 800, 32, root.derive(0));
  const auto split = data::split_minival(pool, 0.25, root.derive(1));
  const train::TrainData td{&split.train, &split.minival, nullptr, {}};

  nas::SearchConfig cfg;
  cfg.budget = 16;
  cfg.seed = 2026;
  cfg.eval.epochs = 2;
  cfg.eval.image_size = 32;
  cfg.eval.timing.image_size = 64;
  cfg.eval.timing.repeats = 5;
  const auto space = nas::SearchSpace::tiny(10);
  const auto dir = output_root() / "nas";
  fs::create_directories(dir);

  cfg.trace_path = dir / "trace_a.jsonl";
  const auto first = nas::random_search(space, td, cfg);
  cfg.trace_path = dir / "trace_b.jsonl";
  const auto second = nas::random_search(space, td, cfg);

  out.check(first.trace.size() == 16 && second.trace.size() == 16, "trace sizes differ from the budget");
  const auto reread = nas::read_trace(dir / "trace_a.jsonl");
  out.check(reread.size() == first.trace.size(), "trace file has " + std::to_string(reread.size()) + " records");

  int acc_diff = 0, params_diff = 0, reward_diff = 0, time_off = 0;
  double worst_s = 0.0, worst_reward = 0.0;
  for (std::size_t i = 0; i < std::min(first.trace.size(), second.trace.size()); ++i) {
    const auto& a = first.trace[i];
    const auto& b = second.trace[i];
    if (a.accuracy != b.accuracy) ++acc_diff;
    if (a.params != b.params || a.num_params != b.num_params) ++params_diff;
    if (a.reward != b.reward) {
      ++reward_diff;
      worst_reward = std::max(worst_reward, std::abs(a.reward - b.reward) / std::max(a.reward, 1e-300));
    }
    if (!a.rejected() && !b.rejected()) {
      const double rel = std::abs(a.step_time - b.step_time) / a.step_time;
      worst_s = std::max(worst_s, rel);
      if (rel > kStepTimeRelTol) ++time_off;
    }
  }
  out.check(acc_diff == 0, std::to_string(acc_diff) + "/16 accuracies differ between runs");
  out.check(params_diff == 0, std::to_string(params_diff) + "/16 parameter counts differ between runs");
  out.check(reward_diff == 0, std::to_string(reward_diff) + "/16 rewards differ between runs (worst rel " +
                                  fmt(worst_reward, 3) + ")");
  out.check(time_off == 0, std::to_string(time_off) + "/16 normalized step times differ by more than 20%");

  // Brute-force dominance over the whole trace.
  const auto& trace = first.trace;
  std::vector<std::size_t> expected;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].rejected()) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < trace.size() && !dominated; ++j) {
      if (j == i || trace[j].rejected()) continue;
      const auto& x = trace[j];
      const auto& y = trace[i];
      const bool no_worse = x.accuracy >= y.accuracy && x.step_time <= y.step_time && x.params <= y.params;
      const bool better = x.accuracy > y.accuracy || x.step_time < y.step_time || x.params < y.params;
      dominated = no_worse && better;
    }
    if (!dominated) expected.push_back(i);
  }
  std::vector<std::int64_t> got, want;
  for (const auto& c : first.pareto) got.push_back(c.index);
  for (std::size_t i : expected) want.push_back(trace[i].index);
  out.check(got == want, "returned Pareto front has " + std::to_string(got.size()) + " members, brute force " +
                             std::to_string(want.size()));
  out.note("16 candidates x 2 runs, Pareto front " + std::to_string(got.size()) + ", best reward " +
           fmt(first.ranked.front().reward, 5) + ", worst S drift " + fmt(100 * worst_s, 3) + "%, traces in " +
           dir.string());
}

// --- 9 ----------------------------------------------------------------------------------

void checkpoint_resume(Outcome& out) {
  const Philox root(9, 0x636b7074);
  const auto pool = data::synthetic_dataset(10, 420, 32, root.derive(0));
  const auto split = data::split_minival(pool, 0.1, root.derive(1));
  const train::TrainData td{&split.train, &split.minival, nullptr, {}};

  train::TrainConfig cfg = train::desk_config();
  cfg.seed = 99;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.schedule_mode = train::ScheduleMode::kProgressiveAdaptive;
  cfg.schedule.size_min = 32;
  cfg.schedule.size_max = 48;
  cfg.schedule.num_stages = 3;
  cfg.schedule.reg_max.mixup = 0.4;
  cfg.cutout_size = 8;
  const auto spec = arch::efficientnetv2_desk(10);
  auto fresh = [&] {
    Philox init = Philox(cfg.seed, 0).derive(0x696e6974);
    return arch::Model::instantiate(spec, init);
  };

  auto m_full = fresh();
  train::Trainer full(m_full, cfg, td);
  const auto reference = full.run();

  Philox pick(0x73746f70);
  const std::int64_t stop = 1 + static_cast<std::int64_t>(pick.below(static_cast<std::uint64_t>(full.total_steps() - 1)));
  const auto ckpt = output_root() / "resume.ckpt";
  auto m_a = fresh();
  train::Trainer first(m_a, cfg, td);
  auto resumed = first.run(stop);
  first.save(ckpt);

  auto m_b = fresh();
  train::Trainer second(m_b, cfg, td);
  second.load(ckpt);
  const auto rest = second.run();
  resumed.rows.insert(resumed.rows.end(), rest.rows.begin(), rest.rows.end());

  out.check(resumed.rows.size() == reference.rows.size(), "row counts differ");
  out.check(train::same_modulo_wall_clock(resumed, reference), "resumed metrics differ from the uninterrupted run");
  bool weights_equal = m_b.parameters().size() == m_full.parameters().size();
  for (std::size_t i = 0; weights_equal && i < m_full.parameters().size(); ++i) {
    const auto a = m_full.parameters()[i].tensor.data();
    const auto b = m_b.parameters()[i].tensor.data();
    weights_equal = std::equal(a.begin(), a.end(), b.begin(), b.end());
  }
  out.check(weights_equal, "final weights differ");
  fs::remove(ckpt);
  out.note("interrupted at step " + std::to_string(stop) + " of " + std::to_string(full.total_steps()) +
           ", metrics and weights bit-identical");
}

// --- 10 ---------------------------------------------------------------------------------

void augment_contracts(Outcome& out) {
  Philox rng(0x6d6978);
  double worst_mean = 0.0, worst_simplex = 0.0;
  bool nonnegative = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(31));
    Tensor x({n, 3, 8, 8});
    for (auto& v : x.mutable_data()) v = static_cast<Real>(rng.uniform(-2.0, 2.0));
    std::vector<int> y(n);
    for (auto& l : y) l = static_cast<int>(rng.below(10));
    const auto m = data::mixup(x, data::one_hot(y, 10), rng.uniform(0.1, 2.0), rng);
    double before = 0.0, after = 0.0;
    for (Real v : x.data()) before += v;
    for (Real v : m.images.data()) after += v;
    worst_mean = std::max(worst_mean, std::abs(after - before) / static_cast<double>(x.numel()));
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < 10; ++k) {
        const double v = m.labels.data()[static_cast<std::size_t>(i) * 10 + k];
        nonnegative = nonnegative && v >= 0.0;
        s += v;
      }
      worst_simplex = std::max(worst_simplex, std::abs(s - 1.0));
    }
  }
  out.check(worst_mean <= kMixupMeanTol, "mixup batch mean moved by " + fmt(worst_mean));
  out.check(nonnegative && worst_simplex <= kSimplexTol, "mixup labels off the simplex by " + fmt(worst_simplex));

  int identity_broken = 0;
  for (int trial = 0; trial < 50; ++trial) {
    data::Image img(3, 32, 32);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
    for (data::AugOp op : data::kAugOps) {
      if (!(data::apply_op(img, op, data::op_strength(op, 0.0)) == img)) ++identity_broken;
    }
    if (!(data::randaugment(img, 0.0, 1 + static_cast<int>(rng.below(4)), rng) == img)) ++identity_broken;
  }
  out.check(identity_broken == 0, std::to_string(identity_broken) + " magnitude-0 augmentations changed the image");

  const auto& c = cifar();
  out.check(c.train.size() == 49000, "train split " + std::to_string(c.train.size()));
  out.check(c.minival.size() == 1000, "minival split " + std::to_string(c.minival.size()));
  out.check(c.eval.size() == 10000, "eval split " + std::to_string(c.eval.size()));
  out.note("mixup mean drift " + fmt(worst_mean, 3) + ", simplex error " + fmt(worst_simplex, 3) + "; " +
           data_label() + " splits " + std::to_string(c.train.size()) + "/" + std::to_string(c.minival.size()) + "/" +
           std::to_string(c.eval.size()));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "fused B4 variants: params, ratios, FLOP order", 1.0, fused_b4},
      {2, "EfficientNetV2-S stage table, params, FLOPs; V1 baselines", 1.0, v2_s_static},
      {3, "progressive schedule plan and randomized properties", 5.0, schedule_exact},
      {4, "finite-difference gradients in 64-bit mode", 120.0, gradients},
      {5, "NAS reward function", 1.0, reward_fn},
      {6, "progressive training wall-clock vs fixed final size", 1800.0, progressive_speed},
      {7, "adaptive vs vanilla regularization, 3 seeds", 5400.0, adaptive_ablation},
      {8, "NAS random search end to end", 2700.0, nas_end_to_end},
      {9, "checkpoint resume determinism", 300.0, checkpoint_resume},
      {10, "mixup, RandAugment and CIFAR-10 loader contracts", 60.0, augment_contracts},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.check(secs <= c.budget_s, "runtime " + fmt(secs) + " s over the " + fmt(c.budget_s) + " s budget");
    if (!out.pass) ++failed;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << std::setw(2) << c.id << ": " << c.name << " ("
              << std::fixed << std::setprecision(2) << secs << " s)" << std::defaultfloat;
    for (const auto& n : out.notes) std::cout << "\n      " << n;
    std::cout << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
