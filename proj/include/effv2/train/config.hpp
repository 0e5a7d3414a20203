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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "effv2/schedule/schedule.hpp"

namespace effv2::train {

enum class ScheduleMode { kFixed, kProgressiveAdaptive, kProgressiveVanilla, kRandomResize, kRandomResizeAdaptive };
enum class LrDecay { kStaircase, kCosine };

std::string to_string(ScheduleMode mode);
ScheduleMode schedule_mode_from_string(const std::string& text);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  std::int64_t steps_per_epoch = 0;  // 0: one pass over the train split, last partial batch dropped

  double rmsprop_decay = 0.9;
  double momentum = 0.9;
  double rmsprop_epsilon = 1e-3;
  double bn_momentum = 0.99;
  double weight_decay = 1e-5;

  // Peak LR is lr_reference * batch_size / lr_reference_batch.
  double lr_reference = 0.256;
  int lr_reference_batch = 4096;
  LrDecay lr_decay = LrDecay::kStaircase;
  double lr_decay_factor = 0.97;
  double lr_decay_every_epochs = 2.4;
  double warmup_epochs = 5.0;

  double ema_decay = 0.9999;
  double survival_prob = 0.8;

  ScheduleMode schedule_mode = ScheduleMode::kFixed;
  // total_steps is filled in from epochs * steps_per_epoch.
  schedule::StageSchedule schedule;
  int resample_every_epochs = 8;

  int randaug_num_ops = 2;
  int cutout_size = 0;

  int eval_every_epochs = 1;
  int eval_image_size = 0;  // 0: the final scheduled size
  bool eval_ema = true;
  int eval_batch_size = 100;

  bool early_stopping = false;
  int patience = 10;

  std::uint64_t seed = 0;

  double lr_peak() const { return lr_reference * batch_size / lr_reference_batch; }
};

// Throws ValidationError listing every problem.
void validate(const TrainConfig& cfg);

struct LrSchedule {
  double peak = 0.0;
  LrDecay decay = LrDecay::kStaircase;
  double steps_per_epoch = 1.0;
  double warmup_epochs = 0.0;
  double decay_factor = 0.97;
  double decay_every_epochs = 2.4;
  std::int64_t total_steps = 1;  // cosine only
};

LrSchedule make_lr_schedule(const TrainConfig& cfg, std::int64_t steps_per_epoch, std::int64_t total_steps);

// Linear warmup from 0, then staircase decay or cosine to 0 at step total_steps - 1.
double lr_at(std::int64_t step, const LrSchedule& schedule);

// Desk-scale defaults for the v2-desk preset: short warmup, fast EMA, CPU-sized schedule.
TrainConfig desk_config();

}  // namespace effv2::train
