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
#include <vector>

#include "doctest.h"
#include "effv2/common/rng.hpp"

using effv2::Philox;

TEST_CASE("philox block matches Random123 known answers") {
  CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu}) ==
        std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("same seed and stream reproduce, different streams diverge") {
  Philox a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs |= x != c();
  }
  CHECK(differs);
}

TEST_CASE("state round trip resumes mid-block") {
  Philox a(3, 1);
  for (int i = 0; i < 5; ++i) a();
  Philox b = Philox::from_state(a.state());
  for (int i = 0; i < 20; ++i) CHECK(a() == b());
}

TEST_CASE("derived streams are stable and distinct") {
  const Philox root(11);
  Philox d1 = root.derive(5);
  Philox d2 = root.derive(5);
  Philox d3 = root.derive(6);
  CHECK(d1.stream() == d2.stream());
  CHECK(d1.stream() != d3.stream());
  CHECK(d1() == d2());
}

TEST_CASE("uniform, below and beta stay in range with sane moments") {
  Philox rng(1);
  double mean = 0.0;
  std::vector<int> counts(6, 0);
  const int trials = 60000;
  for (int i = 0; i < trials; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean += u;
    ++counts[rng.below(6)];
  }
  CHECK(mean / trials == doctest::Approx(0.5).epsilon(0.01));
  for (int c : counts) CHECK(std::abs(c - trials / 6) < 5 * std::sqrt(trials / 6.0));

  double beta_mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double b = rng.beta(0.2, 0.2);
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
    beta_mean += b;
  }
  CHECK(beta_mean / 20000 == doctest::Approx(0.5).epsilon(0.03));
  CHECK(rng.beta(0.0, 0.0) == 0.0);
}
