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

#include "effv2/nas/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "effv2/arch/cost.hpp"
#include "effv2/arch/model.hpp"
#include "effv2/arch/serialize.hpp"
#include "effv2/common/error.hpp"
#include "effv2/data/augment.hpp"
#include "effv2/tensor/tape.hpp"

namespace effv2::nas {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

template <typename T>
const T& pick(const std::vector<T>& choices, Philox& rng) {
  return choices[rng.below(choices.size())];
}

std::uint64_t candidate_seed(std::uint64_t search_seed, std::int64_t index) {
  return mix64(search_seed ^ mix64(static_cast<std::uint64_t>(index) + 0x6e6173));
}

json nullable(double v, bool present) { return present ? json(v) : json(nullptr); }

}  // namespace

SearchSpace SearchSpace::around(const arch::ArchSpec& backbone, int layer_delta) {
  if (layer_delta < 0) throw ValidationError("layer_delta must be >= 0");
  SearchSpace s;
  s.backbone = backbone;
  for (const auto& b : backbone.stages) {
    StageChoices c;
    c.min_layers = std::max(1, b.num_layers - layer_delta);
    c.max_layers = b.num_layers + layer_delta;
    s.stages.push_back(c);
  }
  return s;
}

SearchSpace SearchSpace::singleton(const arch::ArchSpec& backbone) {
  SearchSpace s;
  s.backbone = backbone;
  for (const auto& b : backbone.stages) {
    StageChoices c;
    c.ops = {b.op};
    c.kernels = {b.kernel};
    c.expansions = {b.expansion};
    c.min_layers = c.max_layers = b.num_layers;
    s.stages.push_back(c);
  }
  return s;
}

SearchSpace SearchSpace::tiny(int num_classes) {
  SearchSpace s = around(arch::efficientnetv2_desk(num_classes), 0);
  for (auto& c : s.stages) {
    c.min_layers = 1;
    c.max_layers = 2;
  }
  return s;
}

void validate(const SearchSpace& space) {
  std::vector<std::string> problems;
  try {
    arch::validate(space.backbone);
  } catch (const ValidationError& e) {
    problems.push_back(e.what());
  }
  if (space.stages.size() != space.backbone.stages.size()) {
    problems.push_back("search space has " + std::to_string(space.stages.size()) + " stage entries, backbone has " +
                       std::to_string(space.backbone.stages.size()));
  }
  if (!(space.mbconv_se_ratio >= 0.0 && space.mbconv_se_ratio <= 1.0)) problems.push_back("mbconv_se_ratio must be in [0, 1]");
  for (std::size_t i = 0; i < space.stages.size(); ++i) {
    const auto& c = space.stages[i];
    const std::string where = "stage " + std::to_string(i + 1) + ": ";
    if (c.ops.empty() || c.kernels.empty() || c.expansions.empty()) problems.push_back(where + "every factor needs at least one choice");
    for (auto op : c.ops) {
      if (op != arch::OpType::kMBConv && op != arch::OpType::kFusedMBConv) problems.push_back(where + "op must be MBConv or FusedMBConv");
    }
    for (int k : c.kernels) {
      if (k < 1 || k % 2 == 0) problems.push_back(where + "kernel " + std::to_string(k) + " must be odd and positive");
    }
    for (int e : c.expansions) {
      if (e != 1 && e != 4 && e != 6) problems.push_back(where + "expansion " + std::to_string(e) + " must be 1, 4 or 6");
    }
    if (c.min_layers < 1 || c.max_layers < c.min_layers) problems.push_back(where + "layer range must satisfy 1 <= min <= max");
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << problems.size() << " problem(s) in search space:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ValidationError(msg.str());
  }
}

arch::ArchSpec sample_arch(const SearchSpace& space, Philox& rng) {
  arch::ArchSpec a = space.backbone;
  for (std::size_t i = 0; i < space.stages.size(); ++i) {
    const auto& c = space.stages[i];
    auto& b = a.stages[i];
    b.op = pick(c.ops, rng);
    b.kernel = pick(c.kernels, rng);
    b.expansion = pick(c.expansions, rng);
    b.num_layers = c.min_layers + static_cast<int>(rng.below(static_cast<std::uint64_t>(c.max_layers - c.min_layers + 1)));
    if (b.op != space.backbone.stages[i].op) b.se_ratio = b.op == arch::OpType::kMBConv ? space.mbconv_se_ratio : 0.0;
  }
  a.name = space.backbone.name + "-candidate";
  arch::validate(a);
  return a;
}

void validate(const RewardParams& p) {
  std::vector<std::string> problems;
  if (!(p.w < 0.0)) problems.push_back("w must be negative");
  if (!(p.v < 0.0)) problems.push_back("v must be negative");
  if (!(p.step_time_ref_s > 0.0) || !std::isfinite(p.step_time_ref_s)) problems.push_back("step_time_ref_s must be positive");
  if (!(p.params_ref > 0.0) || !std::isfinite(p.params_ref)) problems.push_back("params_ref must be positive");
  if (!problems.empty()) {
    std::string msg = "invalid reward parameters:";
    for (const auto& s : problems) msg += "\n  - " + s;
    throw ValidationError(msg);
  }
}

double reward(double accuracy, double step_time, double params, const RewardParams& rp) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw ValidationError("reward: accuracy must be a fraction in [0, 1]");
  if (!(step_time > 0.0) || !std::isfinite(step_time)) throw ValidationError("reward: step time must be positive");
  if (!(params > 0.0) || !std::isfinite(params)) throw ValidationError("reward: params must be positive");
  return accuracy * std::pow(step_time, rp.w) * std::pow(params, rp.v);
}

bool Candidate::has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

Candidate sample_candidate(const SearchSpace& space, Philox& rng) {
  Candidate c;
  c.arch = sample_arch(space, rng);
  return c;
}

double measure_step_time(const arch::ArchSpec& a, const TimingConfig& t) {
  if (t.repeats < 1 || t.warmup < 0 || t.batch_size < 1) throw ValidationError("timing needs repeats >= 1, warmup >= 0, batch >= 1");
  const std::int64_t bytes = arch::estimate_training_bytes(a, t.image_size, t.batch_size);
  if (bytes > t.memory_budget_bytes) {
    throw ValidationError("'" + a.name + "' needs about " + std::to_string(bytes >> 20) + " MiB at size " +
                          std::to_string(t.image_size) + ", over the " + std::to_string(t.memory_budget_bytes >> 20) +
                          " MiB budget");
  }
  Philox rng(0x74696d65);
  arch::Model model = arch::Model::instantiate(a, rng);
  Tensor x({t.batch_size, 3, t.image_size, t.image_size});
  for (auto& v : x.mutable_data()) v = static_cast<Real>(rng.normal());
  std::vector<int> labels(t.batch_size);
  for (int i = 0; i < t.batch_size; ++i) labels[i] = i % a.num_classes;
  const Tensor y = data::one_hot(labels, a.num_classes);
  auto state = train::RmsPropState::zeros(model.parameters());

  std::vector<double> times;
  for (int i = 0; i < t.warmup + t.repeats; ++i) {
    const auto t0 = Clock::now();
    Philox fwd = rng.derive(static_cast<std::uint64_t>(i));
    arch::ForwardOptions opts{Mode::kTrain, 0.0, 1.0, 0.99, &fwd};
    model.zero_grad();
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = softmax_cross_entropy(model.forward(x, opts), y);
    }
    backward(loss, tape);
    // A tiny LR keeps the timing runs numerically tame.
    train::rmsprop_step(model.parameters(), state, 1e-6, {});
    if (i >= t.warmup) times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  const auto mid = times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2);
  std::nth_element(times.begin(), mid, times.end());
  if (times.size() % 2 == 1) return *mid;
  const double upper = *mid;
  return 0.5 * (upper + *std::max_element(times.begin(), mid));
}

train::TrainConfig EvalConfig::default_train() {
  train::TrainConfig c = train::desk_config();
  c.schedule_mode = train::ScheduleMode::kFixed;
  c.schedule.reg_min = c.schedule.reg_max = {0.0, 0.0, 0.0};
  c.eval_ema = false;
  return c;
}

void validate(const EvalConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.epochs < 1) problems.push_back("epochs must be >= 1");
  if (cfg.image_size < 32) problems.push_back("image_size must be >= 32");
  if (cfg.timing.repeats < 1) problems.push_back("timing.repeats must be >= 1");
  if (cfg.timing.warmup < 0) problems.push_back("timing.warmup must be >= 0");
  if (cfg.timing.batch_size < 1) problems.push_back("timing.batch_size must be >= 1");
  if (cfg.timing.image_size < 32) problems.push_back("timing.image_size must be >= 32");
  if (!problems.empty()) {
    std::string msg = "invalid NAS evaluation config:";
    for (const auto& s : problems) msg += "\n  - " + s;
    throw ValidationError(msg);
  }
}

RewardParams calibrate(const arch::ArchSpec& backbone, const EvalConfig& cfg, RewardParams base) {
  base.step_time_ref_s = measure_step_time(backbone, cfg.timing);
  base.params_ref = static_cast<double>(arch::count_params(backbone).params);
  validate(base);
  return base;
}

Candidate evaluate_candidate(Candidate cand, const train::TrainData& data, const EvalConfig& cfg,
                             const RewardParams& rp) {
  validate(cfg);
  validate(rp);
  cand.flags.clear();
  cand.num_params = arch::count_params(cand.arch).params;
  cand.params = static_cast<double>(cand.num_params) / rp.params_ref;
  try {
    cand.step_time_s = measure_step_time(cand.arch, cfg.timing);
  } catch (const ValidationError&) {
    cand.flags.push_back(kFlagOverMemory);
    cand.accuracy = 1.0 / cand.arch.num_classes;
    cand.step_time_s = 0.0;
    cand.step_time = 0.0;
    cand.reward = 0.0;
    return cand;
  }
  cand.step_time = cand.step_time_s / rp.step_time_ref_s;

  train::TrainConfig tc = cfg.train;
  tc.epochs = cfg.epochs;
  tc.schedule_mode = train::ScheduleMode::kFixed;
  tc.schedule.num_stages = 1;
  tc.schedule.size_min = tc.schedule.size_max = cfg.image_size;
  tc.schedule.reg_max = tc.schedule.reg_min;
  tc.eval_every_epochs = cfg.epochs;
  tc.early_stopping = false;
  tc.seed = cand.seed;
  Philox init = Philox(cand.seed, 0).derive(0x696e6974);
  arch::Model model = arch::Model::instantiate(cand.arch, init);
  try {
    train::Trainer trainer(model, tc, data);
    const auto metrics = trainer.run();
    const auto acc = metrics.final_minival_acc();
    if (!acc) throw ValidationError("NAS candidates need a non-empty minival split");
    cand.accuracy = *acc;
  } catch (const NumericError&) {
    cand.flags.push_back(kFlagDiverged);
    cand.accuracy = 1.0 / cand.arch.num_classes;
  }
  cand.reward = reward(cand.accuracy, cand.step_time, cand.params, rp);
  return cand;
}

bool dominates(const Candidate& a, const Candidate& b) {
  const bool no_worse = a.accuracy >= b.accuracy && a.step_time <= b.step_time && a.params <= b.params;
  const bool better = a.accuracy > b.accuracy || a.step_time < b.step_time || a.params < b.params;
  return no_worse && better;
}

std::vector<std::size_t> pareto_front(const std::vector<Candidate>& c) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].rejected()) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < c.size() && !dominated; ++j) {
      dominated = j != i && !c[j].rejected() && dominates(c[j], c[i]);
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

SearchResult random_search(const SearchSpace& space, const train::TrainData& data, const SearchConfig& cfg) {
  validate(space);
  validate(cfg.eval);
  if (cfg.budget < 1) throw ValidationError("search budget must be >= 1");
  SearchResult result;
  result.reward = calibrate(space.backbone, cfg.eval, cfg.reward);

  std::ofstream trace;
  if (!cfg.trace_path.empty()) {
    if (cfg.trace_path.has_parent_path()) std::filesystem::create_directories(cfg.trace_path.parent_path());
    trace.open(cfg.trace_path, std::ios::trunc);
    if (!trace) throw IoError(cfg.trace_path.string() + ": cannot open for writing");
  }
  const Philox sampler(cfg.seed, 0x6e6173);
  for (std::int64_t i = 0; i < cfg.budget; ++i) {
    Philox rng = sampler.derive(static_cast<std::uint64_t>(i));
    Candidate c = sample_candidate(space, rng);
    c.index = i;
    c.seed = candidate_seed(cfg.seed, i);
    c = evaluate_candidate(std::move(c), data, cfg.eval, result.reward);
    if (trace.is_open()) {
      trace << to_json(c, result.reward).dump() << '\n';
      trace.flush();
      if (!trace) throw IoError(cfg.trace_path.string() + ": write failed");
    }
    result.trace.push_back(std::move(c));
  }

  result.ranked = result.trace;
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const Candidate& a, const Candidate& b) { return a.reward > b.reward; });
  for (std::size_t i : pareto_front(result.trace)) result.pareto.push_back(result.trace[i]);
  return result;
}

json to_json(const Candidate& c, const RewardParams& rp) {
  const bool timed = !c.rejected();
  return json{{"index", c.index},
              {"seed", c.seed},
              {"arch", arch::to_json(c.arch)},
              {"A", c.accuracy},
              {"S", nullable(c.step_time, timed)},
              {"step_time_s", nullable(c.step_time_s, timed)},
              {"P", c.params},
              {"num_params", c.num_params},
              {"reward", c.reward},
              {"w", rp.w},
              {"v", rp.v},
              {"step_time_ref_s", rp.step_time_ref_s},
              {"params_ref", rp.params_ref},
              {"flags", c.flags}};
}

Candidate candidate_from_json(const json& j) {
  try {
    Candidate c;
    c.index = j.at("index").get<std::int64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.arch = arch::arch_from_json(j.at("arch"));
    c.accuracy = j.at("A").get<double>();
    c.step_time = j.at("S").is_null() ? 0.0 : j.at("S").get<double>();
    c.step_time_s = j.at("step_time_s").is_null() ? 0.0 : j.at("step_time_s").get<double>();
    c.params = j.at("P").get<double>();
    c.num_params = j.at("num_params").get<std::int64_t>();
    c.reward = j.at("reward").get<double>();
    c.flags = j.at("flags").get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed NAS trace record: ") + e.what());
  }
}

std::vector<Candidate> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::vector<Candidate> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(candidate_from_json(parse_json(line, path.string() + ":" + std::to_string(lineno))));
  }
  return out;
}

}  // namespace effv2::nas
