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

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "effv2/arch/model.hpp"
#include "effv2/data/dataset.hpp"
#include "effv2/train/checkpoint.hpp"
#include "effv2/train/config.hpp"
#include "effv2/train/metrics.hpp"
#include "effv2/train/optim.hpp"

namespace effv2::train {

struct TrainData {
  const data::Dataset* train = nullptr;
  const data::Dataset* minival = nullptr;
  const data::Dataset* eval = nullptr;  // optional, scored once at the end
  data::ChannelStats stats;             // computed from `train` when empty
};

std::int64_t resolve_steps_per_epoch(const TrainConfig& cfg, std::size_t train_size);

// Plans for the configured mode, summing to epochs * steps_per_epoch.
std::vector<schedule::StagePlan> resolve_plans(const TrainConfig& cfg, std::int64_t steps_per_epoch);

// Top-1 accuracy in eval mode. Independent of batch_size.
double evaluate(arch::Model& model, const data::Dataset& dataset, int image_size, const data::ChannelStats& stats,
                int batch_size = 100);

struct StageEvent {
  int stage = 0;
  std::int64_t step = 0;
  const arch::Model* model = nullptr;
};

// Owns the optimizer state, EMA shadows and step counter around a caller-owned model.
class Trainer {
 public:
  Trainer(arch::Model& model, const TrainConfig& cfg, TrainData data);
  Trainer(arch::Model& model, const TrainConfig& cfg, TrainData data, std::vector<schedule::StagePlan> plans);

  // Runs until total_steps, early stopping, or `stop_at_step` (exclusive) when given.
  // Returns the rows produced by this call.
  Metrics run(std::optional<std::int64_t> stop_at_step = std::nullopt);

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);
  void save(const std::filesystem::path& path) const { save_checkpoint(path, checkpoint()); }
  void load(const std::filesystem::path& path) { restore(load_checkpoint(path)); }

  // Called before the first step of each stage, including after a resume mid-run.
  std::function<void(const StageEvent&)> on_stage_start;
  // When set, a checkpoint is written there every `checkpoint_every_steps` steps and at the end.
  std::filesystem::path checkpoint_path;
  std::int64_t checkpoint_every_steps = 0;

  std::int64_t step() const { return step_; }
  std::int64_t total_steps() const { return total_steps_; }
  std::int64_t steps_per_epoch() const { return steps_per_epoch_; }
  const std::vector<schedule::StagePlan>& plans() const { return plans_; }
  const std::vector<Tensor>& ema_shadow() const { return ema_; }
  const LrSchedule& lr_schedule() const { return lr_; }
  bool finished() const { return step_ >= total_steps_ || stopped_; }

 private:
  std::size_t plan_index(std::int64_t step) const;
  double train_step(const schedule::StagePlan& plan);
  const std::vector<std::size_t>& epoch_order(std::int64_t epoch);
  int eval_size() const;

  arch::Model& model_;
  TrainConfig cfg_;
  TrainData data_;
  std::vector<schedule::StagePlan> plans_;
  std::vector<std::int64_t> plan_end_;
  std::int64_t steps_per_epoch_ = 0;
  std::int64_t total_steps_ = 0;
  LrSchedule lr_;
  RmsPropState opt_;
  std::vector<Tensor> ema_;
  Philox base_;

  std::int64_t step_ = 0;
  double cumulative_time_ = 0.0;
  double best_acc_ = -1.0;
  int bad_evals_ = 0;
  bool stopped_ = false;

  std::int64_t order_epoch_ = -1;
  std::vector<std::size_t> order_;
};

// Convenience wrapper: one uninterrupted run over `plans`.
Metrics train(arch::Model& model, TrainData data, const std::vector<schedule::StagePlan>& plans, const TrainConfig& cfg);

struct FinetuneConfig {
  std::int64_t steps = 300;  // the full-scale protocol uses 10,000
  int batch_size = 32;
  double lr_peak = 0.001;
  int cutout_size = 8;
  int image_size = 32;
  double bn_momentum = 0.9;
  double ema_decay = 0.99;
  double survival_prob = 0.8;
  double dropout = 0.1;
  std::uint64_t seed = 0;
};

// Cosine LR from lr_peak to 0, no weight decay, cutout on, no warmup.
TrainConfig finetune_train_config(const FinetuneConfig& ft, std::size_t train_size);
Metrics finetune(arch::Model& model, TrainData data, const FinetuneConfig& ft);

}  // namespace effv2::train
