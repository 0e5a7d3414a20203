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

#include "effv2/arch/cost.hpp"
#include "effv2/arch/spec.hpp"
#include "effv2/common/json_util.hpp"
#include "effv2/data/dataset.hpp"
#include "effv2/nas/search.hpp"
#include "effv2/train/config.hpp"

namespace effv2::cli {

inline constexpr const char* kOutputDirEnv = "EFFV2_OUTPUT_DIR";
inline constexpr const char* kDefaultOutputDir = "effv2_out";

struct DatasetConfig {
  std::string kind = "synthetic";   // "synthetic" or "cifar10"
  std::filesystem::path path;       // cifar10 only
  std::size_t synthetic_train = 2000;
  std::size_t synthetic_eval = 500;
  int num_classes = 10;
  double minival_fraction = 0.02;
  std::size_t train_limit = 0;      // 0: keep the whole train split
  std::size_t eval_limit = 0;
};

struct NasConfig {
  std::int64_t budget = 32;
  std::string space = "tiny";       // "tiny" or "around"
  int layer_delta = 2;              // "around" only
  nas::EvalConfig eval;
};

struct RunConfig {
  std::string arch = "v2-desk";     // preset name or path to an arch JSON file
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  train::TrainConfig train = train::desk_config();
  std::int64_t checkpoint_every_steps = 0;
  NasConfig nas;
};

// Defaults with the output dir taken from EFFV2_OUTPUT_DIR when set.
RunConfig default_run_config();

// Applies the keys in `j` over `base`. Every problem (unknown keys, wrong types,
// invalid values, missing files) is collected before throwing one ValidationError.
RunConfig parse_run_config(const nlohmann::json& j, RunConfig base = default_run_config());
RunConfig load_run_config(const std::filesystem::path& path);

// Checks the merged config as a whole; called again after CLI overrides.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

struct LoadedData {
  data::Dataset train;
  data::Dataset minival;
  data::Dataset eval;
};

LoadedData load_data(const DatasetConfig& cfg, std::uint64_t seed);

// Human-readable tables.
std::string format_stage_table(const arch::ArchSpec& arch);
std::string format_cost_report(const arch::CostReport& report);
nlohmann::json cost_report_json(const arch::CostReport& report);

}  // namespace effv2::cli
