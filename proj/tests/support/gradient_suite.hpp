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

// Finite-difference verification of every differentiable tensor op. The
// implementation is compiled against the 64-bit engine; this header is
// precision-neutral so 32-bit binaries can call it too.

#include <cstdint>
#include <string>
#include <vector>

namespace effv2::testing {

struct OpGradReport {
  std::string op;
  int shapes = 0;             // randomized shapes checked
  double max_rel_error = 0;   // worst element over all shapes
};

// Fourth-order central differences with step `step` on `shapes_per_op` random shapes per op.
std::vector<OpGradReport> run_gradient_suite(std::uint64_t seed, int shapes_per_op,
                                             double step = 1e-3);

}  // namespace effv2::testing
