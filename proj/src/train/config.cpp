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

#include "effv2/train/config.hpp"

#include <cmath>
#include <numbers>

#include "effv2/common/error.hpp"

namespace effv2::train {

std::string to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::kFixed: return "fixed";
    case ScheduleMode::kProgressiveAdaptive: return "progressive_adaptive";
    case ScheduleMode::kProgressiveVanilla: return "progressive_vanilla";
    case ScheduleMode::kRandomResize: return "random_resize";
    case ScheduleMode::kRandomResizeAdaptive: return "random_resize_adaptive";
  }
  return "?";
}

ScheduleMode schedule_mode_from_string(const std::string& text) {
  for (auto m : {ScheduleMode::kFixed, ScheduleMode::kProgressiveAdaptive, ScheduleMode::kProgressiveVanilla,
                 ScheduleMode::kRandomResize, ScheduleMode::kRandomResizeAdaptive}) {
    if (to_string(m) == text) return m;
  }
  throw ValidationError("unknown schedule mode '" + text +
                        "' (expected fixed, progressive_adaptive, progressive_vanilla, random_resize or "
                        "random_resize_adaptive)");
}

void validate(const TrainConfig& c) {
  std::vector<std::string> problems;
  auto in01 = [&](double v, const char* name, bool closed_hi) {
    if (!std::isfinite(v) || v < 0.0 || (closed_hi ? v > 1.0 : v >= 1.0)) {
      problems.push_back(std::string(name) + (closed_hi ? " must be in [0, 1]" : " must be in [0, 1)"));
    }
  };
  if (c.epochs < 1) problems.push_back("epochs must be >= 1");
  if (c.batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (c.steps_per_epoch < 0) problems.push_back("steps_per_epoch must be >= 0");
  in01(c.rmsprop_decay, "rmsprop_decay", false);
  in01(c.momentum, "momentum", false);
  in01(c.bn_momentum, "bn_momentum", false);
  in01(c.ema_decay, "ema_decay", true);
  if (!(c.rmsprop_epsilon > 0.0)) problems.push_back("rmsprop_epsilon must be > 0");
  if (!(c.weight_decay >= 0.0)) problems.push_back("weight_decay must be >= 0");
  if (!(c.lr_reference > 0.0) || !std::isfinite(c.lr_reference)) problems.push_back("lr_reference must be > 0");
  if (c.lr_reference_batch < 1) problems.push_back("lr_reference_batch must be >= 1");
  if (!(c.lr_decay_factor > 0.0 && c.lr_decay_factor <= 1.0)) problems.push_back("lr_decay_factor must be in (0, 1]");
  if (!(c.lr_decay_every_epochs > 0.0)) problems.push_back("lr_decay_every_epochs must be > 0");
  if (!(c.warmup_epochs >= 0.0)) problems.push_back("warmup_epochs must be >= 0");
  if (!(c.survival_prob > 0.0 && c.survival_prob <= 1.0)) problems.push_back("survival_prob must be in (0, 1]");
  if (c.resample_every_epochs < 1) problems.push_back("resample_every_epochs must be >= 1");
  if (c.randaug_num_ops < 0) problems.push_back("randaug_num_ops must be >= 0");
  if (c.cutout_size < 0) problems.push_back("cutout_size must be >= 0");
  if (c.eval_every_epochs < 1) problems.push_back("eval_every_epochs must be >= 1");
  if (c.eval_image_size != 0 && c.eval_image_size < 8) problems.push_back("eval_image_size must be 0 or >= 8");
  if (c.eval_batch_size < 1) problems.push_back("eval_batch_size must be >= 1");
  if (c.patience < 1) problems.push_back("patience must be >= 1");
  schedule::StageSchedule s = c.schedule;
  s.total_steps = std::max<std::int64_t>(s.total_steps, std::max(1, s.num_stages));
  try {
    schedule::validate(s);
  } catch (const ValidationError& e) {
    problems.push_back(std::string("schedule: ") + e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

LrSchedule make_lr_schedule(const TrainConfig& cfg, std::int64_t steps_per_epoch, std::int64_t total_steps) {
  LrSchedule s;
  s.peak = cfg.lr_peak();
  s.decay = cfg.lr_decay;
  s.steps_per_epoch = static_cast<double>(steps_per_epoch);
  s.warmup_epochs = cfg.warmup_epochs;
  s.decay_factor = cfg.lr_decay_factor;
  s.decay_every_epochs = cfg.lr_decay_every_epochs;
  s.total_steps = total_steps;
  return s;
}

double lr_at(std::int64_t step, const LrSchedule& s) {
  if (step < 0) throw ValidationError("lr_at: step must be >= 0");
  const double epoch = step / s.steps_per_epoch;
  if (epoch < s.warmup_epochs) return s.peak * epoch / s.warmup_epochs;
  if (s.decay == LrDecay::kCosine) {
    const double warm = s.warmup_epochs * s.steps_per_epoch;
    const double span = double(s.total_steps - 1) - warm;
    if (span <= 0.0) return s.peak;
    const double t = std::min(1.0, (step - warm) / span);
    return s.peak * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }
  const double k = std::floor((epoch - s.warmup_epochs) / s.decay_every_epochs);
  return s.peak * std::pow(s.decay_factor, k);
}

TrainConfig desk_config() {
  TrainConfig c;
  c.epochs = 8;
  c.batch_size = 32;
  c.lr_reference = 0.016;  // peak 0.016 at batch 32
  c.lr_reference_batch = 32;
  c.warmup_epochs = 1.0;
  c.lr_decay_every_epochs = 1.0;
  c.ema_decay = 0.99;
  c.bn_momentum = 0.9;
  c.schedule_mode = ScheduleMode::kProgressiveAdaptive;
  c.schedule = schedule::preset_schedule("v2-desk", 4, 4);  // total_steps is filled in by the trainer
  return c;
}

}  // namespace effv2::train
