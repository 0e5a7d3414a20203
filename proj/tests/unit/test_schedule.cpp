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
#include <map>
#include <numeric>

#include "doctest.h"
#include "effv2/common/error.hpp"
#include "effv2/schedule/schedule.hpp"

using namespace effv2;
using namespace effv2::schedule;

namespace {

StageSchedule random_config(Philox& rng) {
  StageSchedule c;
  c.total_steps = 1 + static_cast<std::int64_t>(rng.below(5000));
  c.num_stages = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(12, c.total_steps)));
  c.size_min = 8 + static_cast<int>(rng.below(300));
  c.size_max = c.size_min + static_cast<int>(rng.below(300));
  auto pair = [&](double hi, double& lo_out, double& hi_out) {
    const double a = rng.uniform(0.0, hi), b = rng.uniform(0.0, hi);
    lo_out = std::min(a, b);
    hi_out = std::max(a, b);
  };
  pair(0.99, c.reg_min.dropout, c.reg_max.dropout);
  pair(30.0, c.reg_min.randaug, c.reg_max.randaug);
  pair(1.0, c.reg_min.mixup, c.reg_max.mixup);
  return c;
}

}  // namespace

TEST_CASE("S preset with four stages") {
  const auto plans = make_schedule(preset_schedule("v2-s", 1000, 4));
  REQUIRE(plans.size() == 4);
  const int sizes[] = {128, 184, 240, 300};
  const double gamma[] = {0.1, 0.1 + 0.2 / 3, 0.1 + 0.4 / 3, 0.3};
  const double eps[] = {5, 5 + 10.0 / 3, 5 + 20.0 / 3, 15};
  for (int i = 0; i < 4; ++i) {
    CHECK(plans[i].image_size == sizes[i]);
    CHECK(plans[i].regs.dropout == doctest::Approx(gamma[i]).epsilon(1e-12));
    CHECK(plans[i].regs.randaug == doctest::Approx(eps[i]).epsilon(1e-12));
    CHECK(plans[i].regs.mixup == 0.0);
    CHECK(plans[i].steps == 250);
  }
  CHECK(plans[0].regs.dropout == 0.1);
  CHECK(plans[3].regs.dropout == 0.3);
  CHECK(plans[3].regs.randaug == 15.0);
}

TEST_CASE("degenerate and invalid schedules") {
  StageSchedule c = preset_schedule("v2-s", 10, 1);
  const auto one = make_schedule(c);
  REQUIRE(one.size() == 1);
  CHECK(one[0].image_size == 300);
  CHECK(one[0].regs == c.reg_max);
  CHECK(one[0].steps == 10);

  c.num_stages = 11;
  CHECK_THROWS_AS(make_schedule(c), ValidationError);
  c = preset_schedule("v2-s", 10, 4);
  c.size_min = 400;
  CHECK_THROWS_AS(make_schedule(c), ValidationError);
  CHECK_THROWS_AS(preset_schedule("v2-xl", 10), ValidationError);

  c = preset_schedule("v2-s", 10, 3);
  const auto plans = make_schedule(c);
  CHECK(plans[0].steps == 3);
  CHECK(plans[1].steps == 3);
  CHECK(plans[2].steps == 4);
}

TEST_CASE("vanilla progressive keeps final regularization") {
  const StageSchedule c = preset_schedule("v2-m", 1000, 4);
  const auto adaptive = make_schedule(c);
  const auto vanilla = vanilla_progressive(c);
  REQUIRE(adaptive.size() == vanilla.size());
  for (std::size_t i = 0; i < vanilla.size(); ++i) {
    CHECK(vanilla[i].regs == c.reg_max);
    CHECK(vanilla[i].image_size == adaptive[i].image_size);
    CHECK(vanilla[i].steps == adaptive[i].steps);
  }
  StageSchedule flat = c;
  flat.reg_min = flat.reg_max;
  CHECK(make_schedule(flat) == vanilla_progressive(flat));
}

TEST_CASE("randomized configs keep endpoints and monotonicity") {
  Philox rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const StageSchedule c = random_config(rng);
    const auto plans = make_schedule(c);
    REQUIRE(plans.size() == static_cast<std::size_t>(c.num_stages));
    std::int64_t total = 0;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      total += plans[i].steps;
      CHECK(plans[i].image_size >= c.size_min);
      CHECK(plans[i].image_size <= c.size_max);
      if (i > 0) {
        CHECK(plans[i].image_size >= plans[i - 1].image_size);
        CHECK(plans[i].regs.dropout >= plans[i - 1].regs.dropout);
        CHECK(plans[i].regs.randaug >= plans[i - 1].regs.randaug);
        CHECK(plans[i].regs.mixup >= plans[i - 1].regs.mixup);
      }
    }
    CHECK(total == c.total_steps);
    CHECK(plans.back().image_size == c.size_max);
    CHECK(plans.back().regs == c.reg_max);
    if (c.num_stages > 1) {
      CHECK(plans.front().image_size == c.size_min);
      CHECK(plans.front().regs == c.reg_min);
    }
  }
}

TEST_CASE("random resize") {
  Philox rng(5);
  StageSchedule c = preset_schedule("v2-s", 1000, 4);
  SUBCASE("constant when the size range is a point") {
    c.size_min = c.size_max = 224;
    const RandomResize rr(c, 10, false, rng);
    for (int e = 0; e < 100; ++e) CHECK(rr.plan_for_epoch(e).image_size == 224);
  }
  SUBCASE("size held for eight epochs by default") {
    const RandomResize rr(c, 10, false, rng);
    for (int e = 0; e < 64; ++e) {
      CHECK(rr.plan_for_epoch(e).image_size == rr.plan_for_epoch(e / 8 * 8).image_size);
      CHECK(rr.plan_for_epoch(e).regs == c.reg_max);
    }
    std::int64_t total = 0;
    for (const auto& p : rr.expand()) total += p.steps;
    CHECK(total == c.total_steps);
  }
  SUBCASE("adaptive variant interpolates by size fraction") {
    const RandomResize rr(c, 10, true, rng);
    for (int e = 0; e < 400; e += 8) {
      const auto p = rr.plan_for_epoch(e);
      const double t = double(p.image_size - 128) / (300 - 128);
      CHECK(p.regs.dropout == doctest::Approx(0.1 + 0.2 * t).epsilon(1e-12));
      CHECK(p.regs.randaug == doctest::Approx(5 + 10 * t).epsilon(1e-12));
    }
  }
  SUBCASE("sizes are uniform over multiples of 8") {
    const RandomResize rr(c, 1, false, rng, 1);
    const auto sizes = rr.candidate_sizes();
    std::map<int, int> counts;
    const int draws = 10000;
    for (int e = 0; e < draws; ++e) ++counts[rr.plan_for_epoch(e).image_size];
    CHECK(counts.size() == sizes.size());
    const double expected = double(draws) / sizes.size();
    double chi2 = 0.0;
    for (int s : sizes) chi2 += std::pow(counts[s] - expected, 2) / expected;
    // 22 bins (128..296), 21 dof: the 0.99 quantile of chi-square is 38.93.
    CHECK(sizes.size() == 22);
    CHECK(chi2 < 38.93);
  }
}
