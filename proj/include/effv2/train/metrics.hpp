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
#include <optional>
#include <string>
#include <vector>

namespace effv2::train {

// One row per optimizer step. Accuracy columns are filled on evaluation steps only.
struct MetricRow {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  int stage = 0;
  int image_size = 0;
  double dropout = 0.0;
  double randaug = 0.0;
  double mixup = 0.0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> minival_acc;
  std::optional<double> minival_acc_ema;
  std::optional<double> eval_acc;
  double step_time_s = 0.0;
  double cumulative_time_s = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "step,epoch,stage,image_size,dropout,randaug,mixup,lr,train_loss,minival_acc,minival_acc_ema,eval_acc,"
    "step_time_s,cumulative_time_s";

struct Metrics {
  std::vector<MetricRow> rows;
  bool early_stopped = false;

  std::optional<double> final_minival_acc() const;
  std::optional<double> final_minival_acc_ema() const;
  std::optional<double> final_eval_acc() const;
  double total_time_s() const { return rows.empty() ? 0.0 : rows.back().cumulative_time_s; }

  std::string to_csv(bool include_header = true) const;
  void write_csv(const std::filesystem::path& path) const;
  static Metrics read_csv(const std::filesystem::path& path);
  static Metrics parse_csv(const std::string& text, const std::string& source);
};

// Every column except the two wall-clock ones.
bool same_modulo_wall_clock(const MetricRow& a, const MetricRow& b);
bool same_modulo_wall_clock(const Metrics& a, const Metrics& b);

}  // namespace effv2::train
