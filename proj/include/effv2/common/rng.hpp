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

#include <array>
#include <cstdint>
#include <limits>

namespace effv2 {

// Philox4x32-10 counter-based generator. A (seed, stream) pair names an
// independent sequence; the block counter walks it. Every draw is a pure
// function of (seed, stream, position), so derived streams reproduce
// regardless of the order or thread in which they are consumed.
class Philox {
 public:
  using result_type = std::uint32_t;

  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t block = 0;
    std::uint32_t lane = 4;
  };

  explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0);
  static Philox from_state(const State& state);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Unbiased integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double gamma(double shape);
  // Beta(a, b) via two gamma draws. Degenerate a = b = 0 returns 0.
  double beta(double a, double b);

  // Child generator whose stream id is a hash of this stream and `id`.
  Philox derive(std::uint64_t id) const;

  State state() const;
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  std::uint32_t lane_ = 4;
};

// Stateless 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

}  // namespace effv2
