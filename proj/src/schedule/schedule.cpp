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

#include "effv2/schedule/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "effv2/common/error.hpp"

namespace effv2::schedule {
namespace {

double lerp(double a, double b, double t) { return a + (b - a) * t; }

Regularization lerp(const Regularization& a, const Regularization& b, double t) {
  return {lerp(a.dropout, b.dropout, t), lerp(a.randaug, b.randaug, t), lerp(a.mixup, b.mixup, t)};
}

void check_reg(const Regularization& r, const std::string& where, std::vector<std::string>& problems) {
  if (!std::isfinite(r.dropout) || r.dropout < 0.0 || r.dropout >= 1.0) {
    problems.push_back(where + ".dropout must be in [0, 1)");
  }
  if (!std::isfinite(r.randaug) || r.randaug < 0.0 || r.randaug > 30.0) {
    problems.push_back(where + ".randaug must be in [0, 30]");
  }
  if (!std::isfinite(r.mixup) || r.mixup < 0.0) problems.push_back(where + ".mixup must be >= 0");
}

std::vector<std::int64_t> split_steps(std::int64_t total, int stages) {
  std::vector<std::int64_t> steps(stages, total / stages);
  steps.back() += total % stages;
  return steps;
}

}  // namespace

void validate(const StageSchedule& cfg) {
  std::vector<std::string> problems;
  if (cfg.total_steps <= 0) problems.push_back("total_steps must be > 0");
  if (cfg.num_stages < 1) problems.push_back("num_stages must be >= 1");
  if (cfg.num_stages > cfg.total_steps && cfg.total_steps > 0) {
    problems.push_back("num_stages (" + std::to_string(cfg.num_stages) + ") exceeds total_steps (" +
                       std::to_string(cfg.total_steps) + ")");
  }
  if (cfg.size_min < 8) problems.push_back("size_min must be >= 8");
  if (cfg.size_min > cfg.size_max) {
    problems.push_back("size_min (" + std::to_string(cfg.size_min) + ") exceeds size_max (" +
                       std::to_string(cfg.size_max) + ")");
  }
  check_reg(cfg.reg_min, "reg_min", problems);
  check_reg(cfg.reg_max, "reg_max", problems);
  if (cfg.reg_min.dropout > cfg.reg_max.dropout) problems.push_back("reg_min.dropout exceeds reg_max.dropout");
  if (cfg.reg_min.randaug > cfg.reg_max.randaug) problems.push_back("reg_min.randaug exceeds reg_max.randaug");
  if (cfg.reg_min.mixup > cfg.reg_max.mixup) problems.push_back("reg_min.mixup exceeds reg_max.mixup");
  if (!problems.empty()) {
    std::string msg = "invalid schedule:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

int round_size(double size, int lo, int hi) {
  const int r = static_cast<int>(std::lround(size / 8.0)) * 8;
  return std::clamp(r, lo, hi);
}

std::vector<StagePlan> make_schedule(const StageSchedule& cfg) {
  validate(cfg);
  const int m = cfg.num_stages;
  const auto steps = split_steps(cfg.total_steps, m);
  std::vector<StagePlan> plans;
  if (m == 1) {
    plans.push_back({0, cfg.size_max, cfg.reg_max, steps[0]});
    return plans;
  }
  for (int i = 0; i < m; ++i) {
    StagePlan p;
    p.stage_index = i;
    p.steps = steps[i];
    if (i == 0) {
      p.image_size = cfg.size_min;
      p.regs = cfg.reg_min;
    } else if (i == m - 1) {
      p.image_size = cfg.size_max;
      p.regs = cfg.reg_max;
    } else {
      const double t = static_cast<double>(i) / (m - 1);
      p.image_size = round_size(lerp(cfg.size_min, cfg.size_max, t), cfg.size_min, cfg.size_max);
      p.regs = lerp(cfg.reg_min, cfg.reg_max, t);
    }
    plans.push_back(p);
  }
  return plans;
}

std::vector<StagePlan> vanilla_progressive(const StageSchedule& cfg) {
  auto plans = make_schedule(cfg);
  for (auto& p : plans) p.regs = cfg.reg_max;
  return plans;
}

StageSchedule preset_schedule(const std::string& name, std::int64_t total_steps, int num_stages) {
  StageSchedule s;
  s.total_steps = total_steps;
  s.num_stages = num_stages;
  if (name == "v2-s" || name == "s") {
    s.size_min = 128;
    s.size_max = 300;
    s.reg_min = {0.1, 5, 0};
    s.reg_max = {0.3, 15, 0};
  } else if (name == "v2-m" || name == "m") {
    s.size_min = 128;
    s.size_max = 380;
    s.reg_min = {0.1, 5, 0};
    s.reg_max = {0.4, 20, 0.2};
  } else if (name == "v2-l" || name == "l") {
    s.size_min = 128;
    s.size_max = 380;
    s.reg_min = {0.1, 5, 0};
    s.reg_max = {0.5, 25, 0.4};
  } else if (name == "v2-desk" || name == "desk") {
    s.size_min = 64;
    s.size_max = 160;
    s.reg_min = {0.05, 2, 0};
    s.reg_max = {0.2, 10, 0.2};
  } else {
    throw ValidationError("unknown schedule preset '" + name + "' (expected v2-s, v2-m, v2-l or v2-desk)");
  }
  validate(s);
  return s;
}

RandomResize::RandomResize(const StageSchedule& cfg, std::int64_t steps_per_epoch, bool adaptive,
                           const Philox& rng, int resample_every_epochs)
    : cfg_(cfg), steps_per_epoch_(steps_per_epoch), adaptive_(adaptive), rng_(rng), every_(resample_every_epochs) {
  validate(cfg);
  if (steps_per_epoch <= 0) throw ValidationError("steps_per_epoch must be > 0");
  if (resample_every_epochs <= 0) throw ValidationError("resample_every_epochs must be > 0");
  for (int s = (cfg.size_min + 7) / 8 * 8; s <= cfg.size_max; s += 8) sizes_.push_back(s);
  if (sizes_.empty()) sizes_.push_back(cfg.size_min);
}

StagePlan RandomResize::plan_for_epoch(int epoch) const {
  if (epoch < 0) throw ValidationError("epoch must be >= 0");
  const int window = epoch / every_;
  Philox draw = rng_.derive(static_cast<std::uint64_t>(window));
  StagePlan p;
  p.stage_index = window;
  p.image_size = sizes_[draw.below(sizes_.size())];
  p.steps = steps_per_epoch_ * every_;
  if (!adaptive_) {
    p.regs = cfg_.reg_max;
  } else if (cfg_.size_max == cfg_.size_min) {
    p.regs = cfg_.reg_max;
  } else {
    const double t = double(p.image_size - cfg_.size_min) / (cfg_.size_max - cfg_.size_min);
    p.regs = lerp(cfg_.reg_min, cfg_.reg_max, t);
  }
  return p;
}

std::vector<StagePlan> RandomResize::expand() const {
  std::vector<StagePlan> plans;
  std::int64_t remaining = cfg_.total_steps;
  for (int epoch = 0; remaining > 0; epoch += every_) {
    StagePlan p = plan_for_epoch(epoch);
    p.steps = std::min(p.steps, remaining);
    remaining -= p.steps;
    plans.push_back(p);
  }
  return plans;
}

std::string format_plan_table(const std::vector<StagePlan>& plans) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %6s %8s %8s %8s %10s\n", "stage", "size", "dropout", "randaug",
                "mixup", "steps");
  out << line;
  for (const auto& p : plans) {
    std::snprintf(line, sizeof line, "%-6d %6d %8.4f %8.4f %8.4f %10lld\n", p.stage_index, p.image_size,
                  p.regs.dropout, p.regs.randaug, p.regs.mixup, static_cast<long long>(p.steps));
    out << line;
  }
  return out.str();
}

}  // namespace effv2::schedule
