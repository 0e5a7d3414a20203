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

#include <cstddef>

#include "effv2/tensor/real.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {
namespace detail {

// C[M x N] (+)= A[M x K] * B[K x N], all row-major. Each C element sums k in
// ascending order within fixed 256-wide k blocks, and the blocks in ascending
// order, so results do not depend on the thread count.
void gemm(int m, int n, int k, const Real* a, int lda, const Real* b, int ldb, Real* c, int ldc,
          bool accumulate, bool parallel);

// dst[cols x rows] = transpose(src[rows x cols]).
void transpose(int rows, int cols, const Real* src, Real* dst);

}  // namespace detail
}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
