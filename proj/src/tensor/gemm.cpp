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

#include "gemm.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {
namespace detail {
namespace {

constexpr int kMr = 4;
constexpr int kNr = 16;
constexpr int kKc = 256;  // k block; C accumulates across blocks in ascending order

// apack: kc x kMr (p-major), bpack: kc x kNr (p-major). Writes the mr x nr corner.
void micro_kernel(int kc, const Real* apack, const Real* bpack, Real* c, int ldc, int mr, int nr, bool accumulate) {
  Real acc[kMr][kNr] = {};
  for (int p = 0; p < kc; ++p) {
    const Real* brow = bpack + static_cast<std::size_t>(p) * kNr;
    const Real* acol = apack + static_cast<std::size_t>(p) * kMr;
    for (int r = 0; r < kMr; ++r) {
      const Real av = acol[r];
#pragma omp simd
      for (int j = 0; j < kNr; ++j) acc[r][j] += av * brow[j];
    }
  }
  if (mr == kMr && nr == kNr) {
    for (int r = 0; r < kMr; ++r) {
      Real* crow = c + static_cast<std::size_t>(r) * ldc;
      if (accumulate) {
#pragma omp simd
        for (int j = 0; j < kNr; ++j) crow[j] += acc[r][j];
      } else {
#pragma omp simd
        for (int j = 0; j < kNr; ++j) crow[j] = acc[r][j];
      }
    }
    return;
  }
  for (int r = 0; r < mr; ++r) {
    Real* crow = c + static_cast<std::size_t>(r) * ldc;
    for (int j = 0; j < nr; ++j) crow[j] = accumulate ? crow[j] + acc[r][j] : acc[r][j];
  }
}

// Packs rows [0, m) x k-range of A into row blocks of kMr, zero-padded.
void pack_a(int m, int kc, const Real* a, int lda, Real* out) {
  const int blocks = (m + kMr - 1) / kMr;
  for (int blk = 0; blk < blocks; ++blk) {
    Real* dst = out + static_cast<std::size_t>(blk) * kc * kMr;
    for (int r = 0; r < kMr; ++r) {
      const int row = blk * kMr + r;
      if (row < m) {
        const Real* src = a + static_cast<std::size_t>(row) * lda;
        for (int p = 0; p < kc; ++p) dst[p * kMr + r] = src[p];
      } else {
        for (int p = 0; p < kc; ++p) dst[p * kMr + r] = Real(0);
      }
    }
  }
}

void pack_b(int kc, int nr, const Real* b, int ldb, Real* out) {
  for (int p = 0; p < kc; ++p) {
    const Real* src = b + static_cast<std::size_t>(p) * ldb;
    Real* dst = out + static_cast<std::size_t>(p) * kNr;
    int j = 0;
    for (; j < nr; ++j) dst[j] = src[j];
    for (; j < kNr; ++j) dst[j] = Real(0);
  }
}

// One column tile against every row block for one k block.
void column_tile(int m, int kc, const Real* apack, const Real* b, int ldb, Real* c, int ldc, int nr, bool accumulate) {
  thread_local std::vector<Real> bpack;
  bpack.resize(static_cast<std::size_t>(kKc) * kNr);
  pack_b(kc, nr, b, ldb, bpack.data());
  const int blocks = (m + kMr - 1) / kMr;
  for (int blk = 0; blk < blocks; ++blk) {
    const int i0 = blk * kMr;
    micro_kernel(kc, apack + static_cast<std::size_t>(blk) * kc * kMr, bpack.data(), c + static_cast<std::size_t>(i0) * ldc,
                 ldc, std::min(kMr, m - i0), nr, accumulate);
  }
}

}  // namespace

void gemm(int m, int n, int k, const Real* a, int lda, const Real* b, int ldb, Real* c, int ldc, bool accumulate,
          bool parallel) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    if (!accumulate) {
      for (int i = 0; i < m; ++i) std::fill_n(c + static_cast<std::size_t>(i) * ldc, n, Real(0));
    }
    return;
  }
  const int mblocks = (m + kMr - 1) / kMr;
  const int tiles = (n + kNr - 1) / kNr;
  std::vector<Real> apack(static_cast<std::size_t>(mblocks) * kMr * std::min(k, kKc));
  for (int k0 = 0; k0 < k; k0 += kKc) {
    const int kc = std::min(kKc, k - k0);
    const bool acc = accumulate || k0 > 0;
    pack_a(m, kc, a + k0, lda, apack.data());
    const Real* bk = b + static_cast<std::size_t>(k0) * ldb;
#pragma omp parallel for schedule(static) if (parallel)
    for (int t = 0; t < tiles; ++t) {
      const int j0 = t * kNr;
      column_tile(m, kc, apack.data(), bk + j0, ldb, c + j0, ldc, std::min(kNr, n - j0), acc);
    }
  }
}

void transpose(int rows, int cols, const Real* src, Real* dst) {
  constexpr int kB = 32;
  for (int r0 = 0; r0 < rows; r0 += kB) {
    for (int c0 = 0; c0 < cols; c0 += kB) {
      const int r1 = std::min(rows, r0 + kB), c1 = std::min(cols, c0 + kB);
      for (int r = r0; r < r1; ++r) {
        for (int col = c0; col < c1; ++col) {
          dst[static_cast<std::size_t>(col) * rows + r] = src[static_cast<std::size_t>(r) * cols + col];
        }
      }
    }
  }
}

}  // namespace detail
}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
