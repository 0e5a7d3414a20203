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

#include <cmath>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "effv2/arch/cost.hpp"
#include "effv2/common/error.hpp"
#include "effv2/nas/search.hpp"

using namespace effv2;
using namespace effv2::nas;

namespace {

struct SmallData {
  data::Dataset train;
  data::Dataset minival;
  SmallData() {
    auto ds = data::synthetic_dataset(10, 240, 32, Philox(21));
    auto split = data::split_minival(ds, 0.25, Philox(22));
    train = std::move(split.train);
    minival = std::move(split.minival);
  }
  train::TrainData data() const { return {&train, &minival, nullptr, {}}; }
};

EvalConfig fast_eval() {
  EvalConfig e;
  e.epochs = 1;
  e.image_size = 32;
  e.train.batch_size = 16;
  e.train.lr_reference_batch = 16;
  e.train.warmup_epochs = 0.5;
  e.timing.image_size = 32;
  e.timing.batch_size = 8;
  e.timing.repeats = 3;
  return e;
}

Candidate fake(double a, double s, double p, std::int64_t index) {
  Candidate c;
  c.accuracy = a;
  c.step_time = s;
  c.params = p;
  c.index = index;
  return c;
}

}  // namespace

TEST_CASE("reward examples and properties") {
  CHECK(reward(0.8, 1.0, 1.0) == 0.8);
  CHECK(reward(0.8, 2.0, 1.0) == doctest::Approx(0.8 * std::exp2(-0.07)).epsilon(1e-12));
  CHECK(reward(0.8, 2.0, 1.0) == doctest::Approx(0.7621).epsilon(1e-4));
  CHECK(reward(0.8, 1.0, 2.0) == doctest::Approx(0.7727).epsilon(1e-4));
  for (double a : {0.1, 0.5, 0.9}) {
    CHECK(reward(a + 0.01, 1.3, 0.7) > reward(a, 1.3, 0.7));
    CHECK(reward(a, 1.31, 0.7) < reward(a, 1.3, 0.7));
    CHECK(reward(a, 1.3, 0.71) < reward(a, 1.3, 0.7));
  }
  // Scaling the reference and the measurement together leaves the reward alone.
  const double raw = 0.37, ref = 0.29;
  CHECK(reward(0.6, raw / ref, 1.0) == doctest::Approx(reward(0.6, (3 * raw) / (3 * ref), 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(reward(0.5, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(reward(0.5, 1.0, -1.0), ValidationError);
  CHECK_THROWS_AS(reward(1.5, 1.0, 1.0), ValidationError);
  RewardParams bad;
  bad.w = 0.1;
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("singleton space always yields the backbone") {
  const auto backbone = arch::efficientnetv2_desk();
  const auto space = SearchSpace::singleton(backbone);
  Philox rng(1);
  for (int i = 0; i < 20; ++i) CHECK(sample_arch(space, rng).stages == backbone.stages);
}

TEST_CASE("sampling is uniform per factor") {
  const auto space = SearchSpace::around(arch::efficientnetv2_desk(), 2);
  validate(space);
  Philox rng(7);
  const int n = 10000;
  std::map<int, int> kernel, expansion, layers, op;
  for (int i = 0; i < n; ++i) {
    const auto a = sample_arch(space, rng);
    CHECK_NOTHROW(arch::validate(a));
    const auto& b = a.stages[3];
    ++kernel[b.kernel];
    ++expansion[b.expansion];
    ++layers[b.num_layers];
    ++op[static_cast<int>(b.op)];
    CHECK(b.out_channels == space.backbone.stages[3].out_channels);
    CHECK(b.stride == space.backbone.stages[3].stride);
  }
  auto check_uniform = [&](const std::map<int, int>& counts, int k) {
    REQUIRE(counts.size() == static_cast<std::size_t>(k));
    const double p = 1.0 / k;
    const double sigma = std::sqrt(n * p * (1 - p));
    for (const auto& [value, count] : counts) CHECK(std::abs(count - n * p) <= 3 * sigma);
  };
  check_uniform(kernel, 2);
  check_uniform(expansion, 3);
  check_uniform(layers, 3);  // backbone has 1 layer: {1, 2, 3}
  check_uniform(op, 2);
}

TEST_CASE("search space validation") {
  auto space = SearchSpace::tiny();
  space.stages[0].expansions = {2};
  space.stages[1].kernels = {};
  space.stages.pop_back();
  try {
    validate(space);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3 problem(s)") != std::string::npos);
  }
}

TEST_CASE("pareto front matches brute force") {
  Philox rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Candidate> cs;
    const int n = 1 + static_cast<int>(rng.below(20));
    for (int i = 0; i < n; ++i) {
      // Coarse grid so ties are common.
      cs.push_back(fake(0.1 * rng.below(5), 1.0 + 0.5 * rng.below(4), 1.0 + 0.25 * rng.below(4), i));
    }
    const auto front = pareto_front(cs);
    for (int i = 0; i < n; ++i) {
      bool dominated = false;
      for (int j = 0; j < n; ++j) {
        const auto& a = cs[j];
        const auto& b = cs[i];
        if (a.accuracy >= b.accuracy && a.step_time <= b.step_time && a.params <= b.params &&
            (a.accuracy > b.accuracy || a.step_time < b.step_time || a.params < b.params)) {
          dominated = true;
        }
      }
      const bool in_front = std::find(front.begin(), front.end(), static_cast<std::size_t>(i)) != front.end();
      CHECK(in_front == !dominated);
    }
  }
  std::vector<Candidate> one{fake(0.3, 1.0, 1.0, 0)};
  CHECK(pareto_front(one) == std::vector<std::size_t>{0});
  one[0].flags.push_back(kFlagOverMemory);
  CHECK(pareto_front(one).empty());
}

TEST_CASE("step time measurement") {
  TimingConfig t;
  t.image_size = 32;
  t.batch_size = 8;
  t.repeats = 5;
  const auto backbone = arch::efficientnetv2_desk();
  auto doubled = backbone;
  for (auto& s : doubled.stages) s.num_layers *= 2;
  const double base = measure_step_time(backbone, t);
  const double twice = measure_step_time(doubled, t);
  CHECK(base > 0.0);
  CHECK(twice / base > 1.0);

  t.repeats = 1;
  const double single = measure_step_time(backbone, t);
  t.repeats = 51;
  const double many = measure_step_time(backbone, t);
  CHECK(std::abs(single - many) <= 0.2 * many);

  t.memory_budget_bytes = 1024;
  CHECK_THROWS_AS(measure_step_time(backbone, t), ValidationError);
}

TEST_CASE("candidate evaluation") {
  SmallData d;
  const auto cfg = fast_eval();
  const auto backbone = arch::efficientnetv2_desk();
  const auto rp = calibrate(backbone, cfg);
  CHECK(rp.params_ref == static_cast<double>(arch::count_params(backbone).params));

  Candidate c;
  c.arch = backbone;
  c.seed = 3;
  const auto a = evaluate_candidate(c, d.data(), cfg, rp);
  const auto b = evaluate_candidate(c, d.data(), cfg, rp);
  CHECK(a.params == 1.0);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.accuracy > 0.0);
  CHECK(a.reward == doctest::Approx(reward(a.accuracy, a.step_time, a.params, rp)).epsilon(1e-15));
  CHECK(a.flags.empty());

  auto wild = cfg;
  wild.train.lr_reference = 1e30;
  const auto diverged = evaluate_candidate(c, d.data(), wild, rp);
  CHECK(diverged.has_flag(kFlagDiverged));
  CHECK(diverged.accuracy == doctest::Approx(0.1));

  auto tight = cfg;
  tight.timing.memory_budget_bytes = 1024;
  const auto rejected = evaluate_candidate(c, d.data(), tight, rp);
  CHECK(rejected.rejected());
  CHECK(rejected.reward == 0.0);
}

TEST_CASE("random search trace") {
  SmallData d;
  SearchConfig cfg;
  cfg.budget = 3;
  cfg.seed = 4;
  cfg.eval = fast_eval();
  cfg.trace_path = std::filesystem::temp_directory_path() / "effv2_test_nas_trace.jsonl";
  const auto result = random_search(SearchSpace::tiny(), d.data(), cfg);
  REQUIRE(result.trace.size() == 3);
  for (std::size_t i = 1; i < result.ranked.size(); ++i) CHECK(result.ranked[i - 1].reward >= result.ranked[i].reward);
  const auto front = pareto_front(result.trace);
  REQUIRE(front.size() == result.pareto.size());
  for (std::size_t i = 0; i < front.size(); ++i) CHECK(result.pareto[i].index == result.trace[front[i]].index);

  const auto back = read_trace(cfg.trace_path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].arch == result.trace[i].arch);
    CHECK(back[i].accuracy == result.trace[i].accuracy);
    CHECK(back[i].reward == result.trace[i].reward);
    CHECK(back[i].step_time == result.trace[i].step_time);
    CHECK(back[i].seed == result.trace[i].seed);
  }
  std::filesystem::remove(cfg.trace_path);

  cfg.budget = 1;
  cfg.trace_path.clear();
  const auto single = random_search(SearchSpace::tiny(), d.data(), cfg);
  REQUIRE(single.pareto.size() == 1);
  CHECK(single.ranked.front().index == 0);
  // Sampling depends only on (seed, index), so the first candidate matches the larger run.
  CHECK(single.trace[0].arch == result.trace[0].arch);
  CHECK(single.trace[0].accuracy == result.trace[0].accuracy);

  cfg.budget = 0;
  CHECK_THROWS_AS(random_search(SearchSpace::tiny(), d.data(), cfg), ValidationError);
}
