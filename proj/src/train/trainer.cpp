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

#include "effv2/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "effv2/common/error.hpp"
#include "effv2/data/augment.hpp"
#include "effv2/tensor/tape.hpp"

namespace effv2::train {
namespace {

using Clock = std::chrono::steady_clock;

// Child stream ids under the run's base generator.
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kAugmentStream = 2;
constexpr std::uint64_t kMixupStream = 3;
constexpr std::uint64_t kForwardStream = 4;

data::Image prepare(const data::Dataset& ds, std::size_t index, int size, const data::ChannelStats& stats,
                    const schedule::Regularization* regs, int num_ops, int cutout_size, Philox* rng) {
  data::Image img = data::resize(ds.image(index), size);
  if (regs) {
    if (regs->randaug > 0.0 && num_ops > 0) img = data::randaugment(img, regs->randaug, num_ops, *rng);
    if (cutout_size > 0) img = data::cutout(img, std::min(cutout_size, size), *rng);
  }
  data::standardize(img, stats);
  return img;
}

std::vector<double> checkpoint_values(const CheckpointRecord& r, std::size_t expected) {
  auto v = r.values();
  if (v.size() != expected) throw IoError("checkpoint record '" + r.name + "' has the wrong size");
  return v;
}

}  // namespace

std::int64_t resolve_steps_per_epoch(const TrainConfig& cfg, std::size_t train_size) {
  if (cfg.steps_per_epoch > 0) return cfg.steps_per_epoch;
  const auto spe = static_cast<std::int64_t>(train_size / static_cast<std::size_t>(cfg.batch_size));
  if (spe < 1) {
    throw ValidationError("train split of " + std::to_string(train_size) + " images is smaller than one batch of " +
                          std::to_string(cfg.batch_size));
  }
  return spe;
}

std::vector<schedule::StagePlan> resolve_plans(const TrainConfig& cfg, std::int64_t steps_per_epoch) {
  schedule::StageSchedule s = cfg.schedule;
  s.total_steps = steps_per_epoch * cfg.epochs;
  switch (cfg.schedule_mode) {
    case ScheduleMode::kFixed: {
      s.num_stages = 1;
      schedule::validate(s);
      return {{0, s.size_max, s.reg_max, s.total_steps}};
    }
    case ScheduleMode::kProgressiveAdaptive: return schedule::make_schedule(s);
    case ScheduleMode::kProgressiveVanilla: return schedule::vanilla_progressive(s);
    case ScheduleMode::kRandomResize:
    case ScheduleMode::kRandomResizeAdaptive: {
      const bool adaptive = cfg.schedule_mode == ScheduleMode::kRandomResizeAdaptive;
      const Philox rng = Philox(cfg.seed, 0).derive(0x72727a);
      return schedule::RandomResize(s, steps_per_epoch, adaptive, rng, cfg.resample_every_epochs).expand();
    }
  }
  return {};
}

double evaluate(arch::Model& model, const data::Dataset& dataset, int image_size, const data::ChannelStats& stats,
                int batch_size) {
  if (dataset.size() == 0) throw ValidationError("cannot evaluate on an empty dataset");
  if (batch_size < 1) throw ValidationError("eval batch size must be >= 1");
  NoGradScope no_grad;
  std::size_t correct = 0;
  const int classes = model.arch().num_classes;
  for (std::size_t first = 0; first < dataset.size(); first += batch_size) {
    const std::size_t n = std::min<std::size_t>(batch_size, dataset.size() - first);
    std::vector<data::Image> images(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) images[i] = prepare(dataset, first + i, image_size, stats, nullptr, 0, 0, nullptr);
    const Tensor logits = model.forward(data::stack(images), {});
    const auto z = logits.data();
    for (std::size_t i = 0; i < n; ++i) {
      const Real* row = z.data() + i * classes;
      const int pred = static_cast<int>(std::max_element(row, row + classes) - row);
      if (pred == dataset.labels[first + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

Trainer::Trainer(arch::Model& model, const TrainConfig& cfg, TrainData data)
    : Trainer(model, cfg, data, {}) {}

Trainer::Trainer(arch::Model& model, const TrainConfig& cfg, TrainData data, std::vector<schedule::StagePlan> plans)
    : model_(model), cfg_(cfg), data_(std::move(data)), base_(cfg.seed, 0) {
  validate(cfg_);
  if (!data_.train || data_.train->size() == 0) throw ValidationError("training needs a non-empty train split");
  if (data_.train->num_classes != model.arch().num_classes) {
    throw ValidationError("dataset has " + std::to_string(data_.train->num_classes) + " classes, model has " +
                          std::to_string(model.arch().num_classes));
  }
  if (data_.stats.mean.empty()) data_.stats = data::channel_stats(*data_.train);
  steps_per_epoch_ = resolve_steps_per_epoch(cfg_, data_.train->size());
  plans_ = plans.empty() ? resolve_plans(cfg_, steps_per_epoch_) : std::move(plans);
  if (plans_.empty()) throw ValidationError("no stage plans");
  for (const auto& p : plans_) {
    if (p.steps < 0) throw ValidationError("stage plan with negative steps");
    total_steps_ += p.steps;
    plan_end_.push_back(total_steps_);
  }
  if (total_steps_ < 1) throw ValidationError("stage plans contain no steps");
  lr_ = make_lr_schedule(cfg_, steps_per_epoch_, total_steps_);
  opt_ = RmsPropState::zeros(model_.parameters());
  ema_ = ema_init(model_.parameters());
}

std::size_t Trainer::plan_index(std::int64_t step) const {
  return static_cast<std::size_t>(std::upper_bound(plan_end_.begin(), plan_end_.end(), step) - plan_end_.begin());
}

int Trainer::eval_size() const {
  if (cfg_.eval_image_size > 0) return cfg_.eval_image_size;
  return plans_.back().image_size;
}

const std::vector<std::size_t>& Trainer::epoch_order(std::int64_t pass) {
  if (pass != order_epoch_) {
    order_.resize(data_.train->size());
    std::iota(order_.begin(), order_.end(), 0);
    Philox r = base_.derive(kShuffleStream).derive(static_cast<std::uint64_t>(pass));
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[r.below(i)]);
    order_epoch_ = pass;
  }
  return order_;
}

double Trainer::train_step(const schedule::StagePlan& plan) {
  const std::size_t n = data_.train->size();
  const std::size_t batch = static_cast<std::size_t>(cfg_.batch_size);
  std::vector<std::size_t> indices(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    const std::uint64_t k = static_cast<std::uint64_t>(step_) * batch + j;
    indices[j] = epoch_order(static_cast<std::int64_t>(k / n))[k % n];
  }
  std::vector<data::Image> images(batch);
  std::vector<int> labels(batch);
  const Philox aug = base_.derive(kAugmentStream).derive(static_cast<std::uint64_t>(step_));
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < batch; ++j) {
    Philox r = aug.derive(j);
    images[j] = prepare(*data_.train, indices[j], plan.image_size, data_.stats, &plan.regs, cfg_.randaug_num_ops,
                        cfg_.cutout_size, &r);
  }
  for (std::size_t j = 0; j < batch; ++j) labels[j] = data_.train->labels[indices[j]];
  Tensor x = data::stack(images);
  Tensor y = data::one_hot(labels, model_.arch().num_classes);
  if (plan.regs.mixup > 0.0) {
    Philox r = base_.derive(kMixupStream).derive(static_cast<std::uint64_t>(step_));
    auto mixed = data::mixup(x, y, plan.regs.mixup, r);
    x = mixed.images;
    y = mixed.labels;
  }
  Philox fwd = base_.derive(kForwardStream).derive(static_cast<std::uint64_t>(step_));
  arch::ForwardOptions opts;
  opts.mode = Mode::kTrain;
  opts.dropout_rate = plan.regs.dropout;
  opts.survival_prob = cfg_.survival_prob;
  opts.bn_momentum = cfg_.bn_momentum;
  opts.rng = &fwd;

  model_.zero_grad();
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = softmax_cross_entropy(model_.forward(x, opts), y);
  }
  const double value = loss.item();
  if (!std::isfinite(value)) throw NumericError("training diverged: loss is " + std::to_string(value) + " at step " + std::to_string(step_));
  backward(loss, tape);
  const RmsPropConfig rc{cfg_.rmsprop_decay, cfg_.momentum, cfg_.rmsprop_epsilon, cfg_.weight_decay};
  rmsprop_step(model_.parameters(), opt_, lr_at(step_, lr_), rc);
  ema_update(ema_, model_.parameters(), cfg_.ema_decay);
  return value;
}

Metrics Trainer::run(std::optional<std::int64_t> stop_at_step) {
  Metrics metrics;
  const std::int64_t end = std::min(total_steps_, stop_at_step.value_or(total_steps_));
  std::size_t last_plan = static_cast<std::size_t>(-1);
  while (step_ < end && !stopped_) {
    const std::size_t pi = plan_index(step_);
    const auto& plan = plans_[pi];
    if (pi != last_plan) {
      if (on_stage_start) on_stage_start({plan.stage_index, step_, &model_});
      last_plan = pi;
    }
    MetricRow row;
    row.step = step_;
    row.epoch = step_ / steps_per_epoch_;
    row.stage = plan.stage_index;
    row.image_size = plan.image_size;
    row.dropout = plan.regs.dropout;
    row.randaug = plan.regs.randaug;
    row.mixup = plan.regs.mixup;
    row.lr = lr_at(step_, lr_);
    const auto t0 = Clock::now();
    row.train_loss = train_step(plan);
    row.step_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
    cumulative_time_ += row.step_time_s;
    row.cumulative_time_s = cumulative_time_;
    ++step_;

    const bool epoch_end = step_ % steps_per_epoch_ == 0;
    const bool last = step_ == total_steps_;
    const bool eval_now = last || (epoch_end && (step_ / steps_per_epoch_) % cfg_.eval_every_epochs == 0);
    if (eval_now && data_.minival && data_.minival->size() > 0) {
      row.minival_acc = evaluate(model_, *data_.minival, eval_size(), data_.stats, cfg_.eval_batch_size);
      if (cfg_.eval_ema) {
        arch::Model shadow = with_parameters(model_, ema_);
        row.minival_acc_ema = evaluate(shadow, *data_.minival, eval_size(), data_.stats, cfg_.eval_batch_size);
      }
      if (*row.minival_acc > best_acc_) {
        best_acc_ = *row.minival_acc;
        bad_evals_ = 0;
      } else if (++bad_evals_ >= cfg_.patience && cfg_.early_stopping) {
        stopped_ = true;
        metrics.early_stopped = true;
      }
    }
    if ((last || stopped_) && data_.eval && data_.eval->size() > 0) {
      row.eval_acc = evaluate(model_, *data_.eval, eval_size(), data_.stats, cfg_.eval_batch_size);
    }
    metrics.rows.push_back(row);
    if (!checkpoint_path.empty() && checkpoint_every_steps > 0 && step_ % checkpoint_every_steps == 0) {
      save(checkpoint_path);
    }
  }
  if (!checkpoint_path.empty() && finished()) save(checkpoint_path);
  return metrics;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.step = static_cast<std::uint64_t>(step_);
  c.rng = base_.state();
  const auto& params = model_.parameters();
  for (const auto& p : params) c.records.push_back(CheckpointRecord::from_tensor("param/" + p.name, p.tensor));
  for (const auto& b : model_.buffers()) c.records.push_back(CheckpointRecord::from_tensor("buffer/" + b.name, b.tensor));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i].tensor.shape();
    c.records.push_back(CheckpointRecord::from_tensor("opt/acc/" + params[i].name, Tensor(s, opt_.accumulator[i])));
    c.records.push_back(CheckpointRecord::from_tensor("opt/mom/" + params[i].name, Tensor(s, opt_.momentum[i])));
    c.records.push_back(CheckpointRecord::from_tensor("ema/" + params[i].name, ema_[i]));
  }
  c.records.push_back(CheckpointRecord::from_values(
      "trainer/state", {cumulative_time_, best_acc_, double(bad_evals_), stopped_ ? 1.0 : 0.0}));
  c.records.push_back(CheckpointRecord::from_values(
      "trainer/run", {double(cfg_.seed), double(total_steps_), double(cfg_.batch_size), double(steps_per_epoch_)}));
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  const auto run = checkpoint_values(c.at("trainer/run"), 4);
  if (run[0] != double(cfg_.seed) || run[1] != double(total_steps_) || run[2] != double(cfg_.batch_size) ||
      run[3] != double(steps_per_epoch_)) {
    throw ValidationError("checkpoint was written by a run with a different seed, batch size or step budget");
  }
  if (c.step > static_cast<std::uint64_t>(total_steps_)) throw ValidationError("checkpoint step exceeds the run length");
  auto& params = model_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params[i].name;
    c.at("param/" + name).copy_to(params[i].tensor);
    Tensor acc(params[i].tensor.shape()), mom(params[i].tensor.shape());
    c.at("opt/acc/" + name).copy_to(acc);
    c.at("opt/mom/" + name).copy_to(mom);
    opt_.accumulator[i].assign(acc.data().begin(), acc.data().end());
    opt_.momentum[i].assign(mom.data().begin(), mom.data().end());
    c.at("ema/" + name).copy_to(ema_[i]);
  }
  for (auto& b : model_.buffers()) c.at("buffer/" + b.name).copy_to(b.tensor);
  const auto st = checkpoint_values(c.at("trainer/state"), 4);
  cumulative_time_ = st[0];
  best_acc_ = st[1];
  bad_evals_ = static_cast<int>(st[2]);
  stopped_ = st[3] != 0.0;
  base_ = Philox::from_state(c.rng);
  step_ = static_cast<std::int64_t>(c.step);
  order_epoch_ = -1;
}

Metrics train(arch::Model& model, TrainData data, const std::vector<schedule::StagePlan>& plans, const TrainConfig& cfg) {
  Trainer t(model, cfg, std::move(data), plans);
  return t.run();
}

TrainConfig finetune_train_config(const FinetuneConfig& ft, std::size_t train_size) {
  if (ft.steps < 1) throw ValidationError("finetune steps must be >= 1");
  (void)train_size;
  TrainConfig c;
  c.epochs = 1;
  c.steps_per_epoch = ft.steps;
  c.batch_size = ft.batch_size;
  c.lr_reference = ft.lr_peak;
  c.lr_reference_batch = ft.batch_size;
  c.lr_decay = LrDecay::kCosine;
  c.warmup_epochs = 0.0;
  c.weight_decay = 0.0;
  c.cutout_size = ft.cutout_size;
  c.ema_decay = ft.ema_decay;
  c.bn_momentum = ft.bn_momentum;
  c.survival_prob = ft.survival_prob;
  c.schedule_mode = ScheduleMode::kFixed;
  c.schedule.num_stages = 1;
  c.schedule.size_min = c.schedule.size_max = ft.image_size;
  c.schedule.reg_min = c.schedule.reg_max = {ft.dropout, 0.0, 0.0};
  c.seed = ft.seed;
  return c;
}

Metrics finetune(arch::Model& model, TrainData data, const FinetuneConfig& ft) {
  const TrainConfig cfg = finetune_train_config(ft, data.train ? data.train->size() : 0);
  Trainer t(model, cfg, std::move(data));
  return t.run();
}

}  // namespace effv2::train
