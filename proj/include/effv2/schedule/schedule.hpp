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
#include <string>
#include <vector>

#include "effv2/common/rng.hpp"

namespace effv2::schedule {

// Magnitudes of the three co-scheduled regularizers.
struct Regularization {
  double dropout = 0.0;  // gamma, in [0, 1)
  double randaug = 0.0;  // epsilon, in [0, 30]
  double mixup = 0.0;    // alpha, >= 0
  bool operator==(const Regularization&) const = default;
};

struct StageSchedule {
  std::int64_t total_steps = 0;
  int num_stages = 4;
  int size_min = 0;
  int size_max = 0;
  Regularization reg_min;
  Regularization reg_max;
};

struct StagePlan {
  int stage_index = 0;
  int image_size = 0;
  Regularization regs;
  std::int64_t steps = 0;
  bool operator==(const StagePlan&) const = default;
};

// Throws ValidationError listing every problem.
void validate(const StageSchedule& cfg);

// Nearest multiple of 8, clamped to [lo, hi].
int round_size(double size, int lo, int hi);

// Sizes and regularization interpolated linearly across stages.
std::vector<StagePlan> make_schedule(const StageSchedule& cfg);

// Same sizes as make_schedule, reg_max on every stage.
std::vector<StagePlan> vanilla_progressive(const StageSchedule& cfg);

// Training presets: S0/Se and the regularization ranges of the S, M and L models.
StageSchedule preset_schedule(const std::string& name, std::int64_t total_steps, int num_stages = 4);

// Resamples the image size uniformly over multiples of 8 in [size_min, size_max]
// every `resample_every_epochs` epochs. Pure in (cfg, seed, epoch).
class RandomResize {
 public:
  RandomResize(const StageSchedule& cfg, std::int64_t steps_per_epoch, bool adaptive,
               const Philox& rng, int resample_every_epochs = 8);

  StagePlan plan_for_epoch(int epoch) const;
  // Window-by-window plan covering total_steps.
  std::vector<StagePlan> expand() const;
  std::vector<int> candidate_sizes() const { return sizes_; }

 private:
  StageSchedule cfg_;
  std::int64_t steps_per_epoch_;
  bool adaptive_;
  Philox rng_;
  int every_;
  std::vector<int> sizes_;
};

std::string format_plan_table(const std::vector<StagePlan>& plans);

}  // namespace effv2::schedule
