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

#include "effv2/arch/spec.hpp"
#include "effv2/common/json_util.hpp"
#include "effv2/common/rng.hpp"
#include "effv2/train/trainer.hpp"

namespace effv2::nas {

// Choices for one backbone stage. Channels and strides always come from the backbone.
struct StageChoices {
  std::vector<arch::OpType> ops{arch::OpType::kMBConv, arch::OpType::kFusedMBConv};
  std::vector<int> kernels{3, 5};
  std::vector<int> expansions{1, 4, 6};
  int min_layers = 1;
  int max_layers = 1;
};

struct SearchSpace {
  arch::ArchSpec backbone;
  std::vector<StageChoices> stages;  // one entry per backbone stage
  double mbconv_se_ratio = 0.25;     // MBConv picks get this SE ratio, Fused-MBConv picks get none

  // Full factor choices with layer counts in [max(1, L - delta), L + delta].
  static SearchSpace around(const arch::ArchSpec& backbone, int layer_delta = 2);
  // Every factor pinned to the backbone value.
  static SearchSpace singleton(const arch::ArchSpec& backbone);
  // The desk backbone with layer counts in {1, 2}.
  static SearchSpace tiny(int num_classes = 10);
};

void validate(const SearchSpace& space);

// One uniform, independent choice per factor per stage.
arch::ArchSpec sample_arch(const SearchSpace& space, Philox& rng);

struct RewardParams {
  double w = -0.07;  // step-time exponent
  double v = -0.05;  // parameter exponent
  double step_time_ref_s = 1.0;
  double params_ref = 1.0;
};

void validate(const RewardParams& params);

// A * S^w * P^v on already-normalized S and P. A in [0, 1]; S, P > 0.
double reward(double accuracy, double step_time, double params, const RewardParams& rp = {});

// Candidate flags.
inline constexpr const char* kFlagDiverged = "diverged";
inline constexpr const char* kFlagOverMemory = "over_memory_budget";

struct Candidate {
  arch::ArchSpec arch;
  std::int64_t index = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;          // A, minival top-1 fraction
  double step_time_s = 0.0;       // raw median seconds per step
  double step_time = 0.0;         // S = step_time_s / step_time_ref_s
  std::int64_t num_params = 0;
  double params = 0.0;            // P = num_params / params_ref
  double reward = 0.0;
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const;
  // Rejected before timing; carries no S and stays out of the Pareto front.
  bool rejected() const { return has_flag(kFlagOverMemory); }
};

Candidate sample_candidate(const SearchSpace& space, Philox& rng);

struct TimingConfig {
  int image_size = 64;
  int batch_size = 32;
  int warmup = 1;
  int repeats = 5;
  std::int64_t memory_budget_bytes = std::int64_t(4) << 30;
};

// Median wall-clock seconds of `repeats` full train steps after `warmup` untimed ones.
// Throws ValidationError when the activation estimate exceeds the memory budget.
double measure_step_time(const arch::ArchSpec& arch, const TimingConfig& timing);

struct EvalConfig {
  int epochs = 3;
  int image_size = 64;
  train::TrainConfig train = default_train();
  TimingConfig timing;

  static train::TrainConfig default_train();
};

void validate(const EvalConfig& cfg);

// Normalizers taken from the backbone: its measured step time and its parameter count.
RewardParams calibrate(const arch::ArchSpec& backbone, const EvalConfig& cfg, RewardParams base = {});

// Trains cand.arch for cfg.epochs at cfg.image_size, with the schedule's reg_min, and fills
// A, S, P and the reward.
// Divergence records A = 1/num_classes with the diverged flag.
Candidate evaluate_candidate(Candidate cand, const train::TrainData& data, const EvalConfig& cfg,
                             const RewardParams& rp);

// a dominates b: A >=, S <=, P <= with at least one strict.
bool dominates(const Candidate& a, const Candidate& b);
// Indices of the undominated candidates, in input order. Rejected candidates are skipped.
std::vector<std::size_t> pareto_front(const std::vector<Candidate>& candidates);

struct SearchConfig {
  std::int64_t budget = 32;
  std::uint64_t seed = 0;
  EvalConfig eval;
  RewardParams reward;
  std::filesystem::path trace_path;  // JSONL, one record per candidate; empty disables
};

struct SearchResult {
  std::vector<Candidate> trace;   // evaluation order
  std::vector<Candidate> ranked;  // by reward, descending; ties keep trace order
  std::vector<Candidate> pareto;  // trace order
  RewardParams reward;            // with the calibrated normalizers
};

SearchResult random_search(const SearchSpace& space, const train::TrainData& data, const SearchConfig& cfg);

nlohmann::json to_json(const Candidate& cand, const RewardParams& rp);
Candidate candidate_from_json(const nlohmann::json& j);
std::vector<Candidate> read_trace(const std::filesystem::path& path);

}  // namespace effv2::nas
