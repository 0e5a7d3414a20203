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

#include "effv2/tensor/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "effv2/common/error.hpp"
#include "gemm.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {
namespace {

int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Output columns ox whose input column ox*stride - pad_left + kx is in range.
struct ColumnRange {
  int lo;
  int hi;
};

ColumnRange column_range(const ConvGeometry& g, int kx) {
  const int lo = std::max(0, ceil_div(g.pad_left - kx, g.stride));
  const int hi = std::min(g.out_w, floor_div(g.in_w - 1 + g.pad_left - kx, g.stride) + 1);
  return {lo, std::max(lo, hi)};
}

// Plane reductions with eight fixed lanes combined in a fixed order, so
// results do not depend on the thread count.
constexpr std::size_t kLanes = 8;

double combine(const double (&acc)[kLanes]) {
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

double lane_sum(const Real* p, std::size_t n) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += p[i + l];
  }
  for (; i < n; ++i) acc[i % kLanes] += p[i];
  return combine(acc);
}

double lane_sq_dev(const Real* p, std::size_t n, double m) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double d = p[i + l] - m;
      acc[l] += d * d;
    }
  }
  for (; i < n; ++i) {
    const double d = p[i] - m;
    acc[i % kLanes] += d * d;
  }
  return combine(acc);
}

double lane_dot_dev(const Real* a, const Real* x, std::size_t n, double m) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += double(a[i + l]) * (x[i + l] - m);
  }
  for (; i < n; ++i) acc[i % kLanes] += double(a[i]) * (x[i] - m);
  return combine(acc);
}

}  // namespace

ConvGeometry ConvGeometry::make(const Shape& input, const Shape& weight, int stride,
                                Padding padding, int groups) {
  if (stride != 1 && stride != 2) throw ShapeError("conv stride must be 1 or 2");
  if (groups <= 0 || input.c % groups != 0 || weight.n % groups != 0) {
    throw ShapeError("conv groups must divide input and output channels");
  }
  auto valid_kernel = [](int k) { return k == 1 || k == 3 || k == 5; };
  if (!valid_kernel(weight.h) || !valid_kernel(weight.w)) {
    throw ShapeError("conv kernel must be 1, 3 or 5, got weight " + weight.str());
  }
  if (weight.c * groups != input.c) {
    throw ShapeError("conv channel mismatch: input " + input.str() + ", weight " + weight.str() +
                     ", groups " + std::to_string(groups));
  }
  ConvGeometry g;
  g.batch = input.n;
  g.in_channels = input.c;
  g.in_h = input.h;
  g.in_w = input.w;
  g.out_channels = weight.n;
  g.kernel_h = weight.h;
  g.kernel_w = weight.w;
  g.stride = stride;
  g.groups = groups;
  if (padding == Padding::kSame) {
    g.out_h = (input.h + stride - 1) / stride;
    g.out_w = (input.w + stride - 1) / stride;
    const int total_h = std::max((g.out_h - 1) * stride + g.kernel_h - input.h, 0);
    const int total_w = std::max((g.out_w - 1) * stride + g.kernel_w - input.w, 0);
    g.pad_top = total_h / 2;
    g.pad_left = total_w / 2;
  } else {
    if (input.h < g.kernel_h || input.w < g.kernel_w) {
      throw ShapeError("valid conv needs input at least as large as the kernel");
    }
    g.out_h = (input.h - g.kernel_h) / stride + 1;
    g.out_w = (input.w - g.kernel_w) / stride + 1;
  }
  return g;
}

namespace kernels {
namespace {

void direct_forward(const ConvGeometry& g, std::span<const Real> x, std::span<const Real> w,
                    std::span<Real> y) {
  const int cin_g = g.in_per_group();
  const int cout_g = g.out_per_group();
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int kk = g.kernel_h * g.kernel_w;
  const std::int64_t jobs = static_cast<std::int64_t>(g.batch) * g.out_channels;

#pragma omp parallel for schedule(static)
  for (std::int64_t job = 0; job < jobs; ++job) {
    const int n = static_cast<int>(job / g.out_channels);
    const int oc = static_cast<int>(job % g.out_channels);
    Real* out = y.data() + static_cast<std::size_t>(job) * out_plane;
    std::fill(out, out + out_plane, Real(0));
    const int group = oc / cout_g;
    for (int icg = 0; icg < cin_g; ++icg) {
      const int ic = group * cin_g + icg;
      const Real* in = x.data() + (static_cast<std::size_t>(n) * g.in_channels + ic) * in_plane;
      const Real* wk = w.data() + (static_cast<std::size_t>(oc) * cin_g + icg) * kk;
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          const Real wv = wk[ky * g.kernel_w + kx];
          const ColumnRange cols = column_range(g, kx);
          for (int oy = 0; oy < g.out_h; ++oy) {
            const int iy = oy * g.stride - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            Real* orow = out + static_cast<std::size_t>(oy) * g.out_w;
            const Real* irow = in + static_cast<std::size_t>(iy) * g.in_w + (kx - g.pad_left);
            if (g.stride == 1) {
#pragma omp simd
              for (int ox = cols.lo; ox < cols.hi; ++ox) orow[ox] += wv * irow[ox];
            } else {
              for (int ox = cols.lo; ox < cols.hi; ++ox) orow[ox] += wv * irow[ox * g.stride];
            }
          }
        }
      }
    }
  }
}

void direct_backward_input(const ConvGeometry& g, std::span<const Real> dy,
                           std::span<const Real> w, std::span<Real> dx) {
  const int cin_g = g.in_per_group();
  const int cout_g = g.out_per_group();
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int kk = g.kernel_h * g.kernel_w;
  const std::int64_t jobs = static_cast<std::int64_t>(g.batch) * g.in_channels;

#pragma omp parallel for schedule(static)
  for (std::int64_t job = 0; job < jobs; ++job) {
    const int n = static_cast<int>(job / g.in_channels);
    const int ic = static_cast<int>(job % g.in_channels);
    Real* din = dx.data() + static_cast<std::size_t>(job) * in_plane;
    const int group = ic / cin_g;
    const int icg = ic % cin_g;
    for (int ocg = 0; ocg < cout_g; ++ocg) {
      const int oc = group * cout_g + ocg;
      const Real* dout = dy.data() + (static_cast<std::size_t>(n) * g.out_channels + oc) * out_plane;
      const Real* wk = w.data() + (static_cast<std::size_t>(oc) * cin_g + icg) * kk;
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          const Real wv = wk[ky * g.kernel_w + kx];
          const ColumnRange cols = column_range(g, kx);
          for (int oy = 0; oy < g.out_h; ++oy) {
            const int iy = oy * g.stride - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            const Real* drow = dout + static_cast<std::size_t>(oy) * g.out_w;
            Real* irow = din + static_cast<std::size_t>(iy) * g.in_w + (kx - g.pad_left);
            if (g.stride == 1) {
#pragma omp simd
              for (int ox = cols.lo; ox < cols.hi; ++ox) irow[ox] += wv * drow[ox];
            } else {
              for (int ox = cols.lo; ox < cols.hi; ++ox) irow[ox * g.stride] += wv * drow[ox];
            }
          }
        }
      }
    }
  }
}

void direct_backward_weight(const ConvGeometry& g, std::span<const Real> x,
                            std::span<const Real> dy, std::span<Real> dw) {
  const int cin_g = g.in_per_group();
  const int cout_g = g.out_per_group();
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int kk = g.kernel_h * g.kernel_w;
  const std::int64_t jobs = static_cast<std::int64_t>(g.out_channels) * cin_g;

#pragma omp parallel for schedule(static)
  for (std::int64_t job = 0; job < jobs; ++job) {
    const int oc = static_cast<int>(job / cin_g);
    const int icg = static_cast<int>(job % cin_g);
    const int ic = (oc / cout_g) * cin_g + icg;
    Real* wk = dw.data() + static_cast<std::size_t>(job) * kk;
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      for (int kx = 0; kx < g.kernel_w; ++kx) {
        const ColumnRange cols = column_range(g, kx);
        double acc = 0.0;
        for (int n = 0; n < g.batch; ++n) {
          const Real* in = x.data() + (static_cast<std::size_t>(n) * g.in_channels + ic) * in_plane;
          const Real* dout =
              dy.data() + (static_cast<std::size_t>(n) * g.out_channels + oc) * out_plane;
          for (int oy = 0; oy < g.out_h; ++oy) {
            const int iy = oy * g.stride - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            const Real* drow = dout + static_cast<std::size_t>(oy) * g.out_w;
            const Real* irow = in + static_cast<std::size_t>(iy) * g.in_w + (kx - g.pad_left);
            Real row = 0;
            if (g.stride == 1) {
#pragma omp simd reduction(+ : row)
              for (int ox = cols.lo; ox < cols.hi; ++ox) row += drow[ox] * irow[ox];
            } else {
              for (int ox = cols.lo; ox < cols.hi; ++ox) row += drow[ox] * irow[ox * g.stride];
            }
            acc += row;
          }
        }
        wk[ky * g.kernel_w + kx] += static_cast<Real>(acc);
      }
    }
  }
}

// Columns of the lowered matrices are (image in chunk, output pixel).
constexpr std::size_t kLoweredBudget = std::size_t(1) << 22;

int chunk_images(const ConvGeometry& g, int kdim) {
  const std::size_t per_image = static_cast<std::size_t>(kdim) * g.out_h * g.out_w;
  return static_cast<int>(std::clamp<std::size_t>(kLoweredBudget / std::max<std::size_t>(per_image, 1), 1, g.batch));
}

// col[(ic * kh + ky) * kw + kx][(n - n0) * P + oy * out_w + ox], ld = images * P.
void im2col(const ConvGeometry& g, const Real* x, int n0, int images, Real* col) {
  const std::size_t p = static_cast<std::size_t>(g.out_h) * g.out_w;
  const std::size_t ld = p * images;
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const bool pointwise = g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1;
  const int rows = g.in_channels * g.kernel_h * g.kernel_w;
#pragma omp parallel for schedule(static)
  for (int row = 0; row < rows; ++row) {
    const int ic = row / (g.kernel_h * g.kernel_w);
    const int ky = (row / g.kernel_w) % g.kernel_h;
    const int kx = row % g.kernel_w;
    const ColumnRange cols = column_range(g, kx);
    for (int i = 0; i < images; ++i) {
      const Real* src = x + (static_cast<std::size_t>(n0 + i) * g.in_channels + ic) * in_plane;
      Real* dst = col + row * ld + i * p;
      if (pointwise) {
        std::copy_n(src, p, dst);
        continue;
      }
      for (int oy = 0; oy < g.out_h; ++oy) {
        Real* drow = dst + static_cast<std::size_t>(oy) * g.out_w;
        const int iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.in_h) {
          std::fill(drow, drow + g.out_w, Real(0));
          continue;
        }
        std::fill(drow, drow + cols.lo, Real(0));
        std::fill(drow + cols.hi, drow + g.out_w, Real(0));
        const Real* srow = src + static_cast<std::size_t>(iy) * g.in_w + (kx - g.pad_left);
        if (g.stride == 1) {
          std::copy(srow + cols.lo, srow + cols.hi, drow + cols.lo);
        } else {
          for (int ox = cols.lo; ox < cols.hi; ++ox) drow[ox] = srow[ox * 2];
        }
      }
    }
  }
}

// Accumulates lowered gradients back into dx.
void col2im(const ConvGeometry& g, const Real* col, int n0, int images, Real* dx) {
  const std::size_t p = static_cast<std::size_t>(g.out_h) * g.out_w;
  const std::size_t ld = p * images;
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const int kk = g.kernel_h * g.kernel_w;
  // One job per (image, input channel): all writes to a plane come from one thread, in a fixed order.
#pragma omp parallel for schedule(static)
  for (int job = 0; job < images * g.in_channels; ++job) {
    const int i = job / g.in_channels;
    const int ic = job % g.in_channels;
    Real* dst = dx + (static_cast<std::size_t>(n0 + i) * g.in_channels + ic) * in_plane;
    for (int kidx = 0; kidx < kk; ++kidx) {
      const int ky = kidx / g.kernel_w, kx = kidx % g.kernel_w;
      const Real* src = col + (static_cast<std::size_t>(ic) * kk + kidx) * ld + i * p;
      const ColumnRange cols = column_range(g, kx);
      for (int oy = 0; oy < g.out_h; ++oy) {
        const int iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        const Real* srow = src + static_cast<std::size_t>(oy) * g.out_w;
        Real* drow = dst + static_cast<std::size_t>(iy) * g.in_w + (kx - g.pad_left);
        if (g.stride == 1) {
#pragma omp simd
          for (int ox = cols.lo; ox < cols.hi; ++ox) drow[ox] += srow[ox];
        } else {
          for (int ox = cols.lo; ox < cols.hi; ++ox) drow[ox * 2] += srow[ox];
        }
      }
    }
  }
}

// NCHW slice [n0, n0 + images) <-> [channels][images * P].
void pack_channels(const Real* t, int channels, std::size_t p, int n0, int images, Real* out) {
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < images; ++i) {
      std::copy_n(t + (static_cast<std::size_t>(n0 + i) * channels + c) * p, p, out + (c * images + i) * p);
    }
  }
}

void unpack_channels(const Real* in, int channels, std::size_t p, int n0, int images, Real* t) {
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < images; ++i) {
      std::copy_n(in + (c * images + i) * p, p, t + (static_cast<std::size_t>(n0 + i) * channels + c) * p);
    }
  }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const Real> x, std::span<const Real> w, std::span<Real> y) {
  if (g.groups != 1) return direct_forward(g, x, w, y);
  const int kdim = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t p = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int chunk = chunk_images(g, kdim);
  std::vector<Real> col(static_cast<std::size_t>(kdim) * p * chunk);
  std::vector<Real> out(static_cast<std::size_t>(g.out_channels) * p * chunk);
  for (int n0 = 0; n0 < g.batch; n0 += chunk) {
    const int images = std::min(chunk, g.batch - n0);
    const int cols = static_cast<int>(p) * images;
    im2col(g, x.data(), n0, images, col.data());
    detail::gemm(g.out_channels, cols, kdim, w.data(), kdim, col.data(), cols, out.data(), cols, false, true);
    unpack_channels(out.data(), g.out_channels, p, n0, images, y.data());
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> dy, std::span<const Real> w,
                           std::span<Real> dx) {
  if (g.groups != 1) return direct_backward_input(g, dy, w, dx);
  const int kdim = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t p = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int chunk = chunk_images(g, kdim);
  std::vector<Real> wt(static_cast<std::size_t>(kdim) * g.out_channels);
  detail::transpose(g.out_channels, kdim, w.data(), wt.data());
  std::vector<Real> dyp(static_cast<std::size_t>(g.out_channels) * p * chunk);
  std::vector<Real> col(static_cast<std::size_t>(kdim) * p * chunk);
  for (int n0 = 0; n0 < g.batch; n0 += chunk) {
    const int images = std::min(chunk, g.batch - n0);
    const int cols = static_cast<int>(p) * images;
    pack_channels(dy.data(), g.out_channels, p, n0, images, dyp.data());
    detail::gemm(kdim, cols, g.out_channels, wt.data(), g.out_channels, dyp.data(), cols, col.data(), cols, false,
                 true);
    col2im(g, col.data(), n0, images, dx.data());
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> x, std::span<const Real> dy,
                            std::span<Real> dw) {
  if (g.groups != 1) return direct_backward_weight(g, x, dy, dw);
  const int kdim = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t p = static_cast<std::size_t>(g.out_h) * g.out_w;
  const int chunk = chunk_images(g, kdim);
  std::vector<Real> col(static_cast<std::size_t>(kdim) * p * chunk);
  std::vector<Real> colt(col.size());
  std::vector<Real> dyp(static_cast<std::size_t>(g.out_channels) * p * chunk);
  for (int n0 = 0; n0 < g.batch; n0 += chunk) {
    const int images = std::min(chunk, g.batch - n0);
    const int cols = static_cast<int>(p) * images;
    im2col(g, x.data(), n0, images, col.data());
    detail::transpose(kdim, cols, col.data(), colt.data());
    pack_channels(dy.data(), g.out_channels, p, n0, images, dyp.data());
    detail::gemm(g.out_channels, kdim, cols, dyp.data(), cols, colt.data(), kdim, dw.data(), kdim, true, true);
  }
}

void batch_norm_forward_train(const BatchNormDims& d, std::span<const Real> x,
                              std::span<const Real> gamma, std::span<const Real> beta, double eps,
                              std::span<Real> y, std::span<double> mean, std::span<double> invstd) {
  const std::size_t plane = static_cast<std::size_t>(d.plane);
  const double count = static_cast<double>(d.batch) * d.plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < d.channels; ++c) {
    double s = 0.0;
    for (int n = 0; n < d.batch; ++n) {
      s += lane_sum(x.data() + (static_cast<std::size_t>(n) * d.channels + c) * plane, plane);
    }
    const double m = s / count;
    double ss = 0.0;
    for (int n = 0; n < d.batch; ++n) {
      ss += lane_sq_dev(x.data() + (static_cast<std::size_t>(n) * d.channels + c) * plane, plane, m);
    }
    const double inv = 1.0 / std::sqrt(ss / count + eps);
    mean[c] = m;
    invstd[c] = inv;
    const Real scale = static_cast<Real>(gamma[c] * inv);
    const Real shift = static_cast<Real>(beta[c] - m * gamma[c] * inv);
    for (int n = 0; n < d.batch; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * d.channels + c) * plane;
      const Real* xp = x.data() + base;
      Real* yp = y.data() + base;
      for (std::size_t i = 0; i < plane; ++i) yp[i] = xp[i] * scale + shift;
    }
  }
}

void batch_norm_forward_eval(const BatchNormDims& d, std::span<const Real> x,
                             std::span<const Real> gamma, std::span<const Real> beta,
                             std::span<const double> mean, std::span<const double> invstd,
                             std::span<Real> y) {
  const std::size_t plane = static_cast<std::size_t>(d.plane);
  const std::int64_t jobs = static_cast<std::int64_t>(d.batch) * d.channels;
#pragma omp parallel for schedule(static)
  for (std::int64_t job = 0; job < jobs; ++job) {
    const int c = static_cast<int>(job % d.channels);
    const double scale = gamma[c] * invstd[c];
    const double shift = beta[c] - mean[c] * scale;
    const std::size_t base = static_cast<std::size_t>(job) * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      y[base + i] = static_cast<Real>(x[base + i] * scale + shift);
    }
  }
}

void batch_norm_backward(const BatchNormDims& d, std::span<const Real> x,
                         std::span<const Real> dy, std::span<const Real> gamma,
                         std::span<const double> mean, std::span<const double> invstd,
                         bool batch_stats, std::span<Real> dx, std::span<Real> dgamma,
                         std::span<Real> dbeta) {
  const std::size_t plane = static_cast<std::size_t>(d.plane);
  const double count = static_cast<double>(d.batch) * d.plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < d.channels; ++c) {
    const double m = mean[c];
    const double inv = invstd[c];
    double sum_dy = 0.0;
    double sum_dy_xc = 0.0;  // sum of dy * (x - mean)
    for (int n = 0; n < d.batch; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * d.channels + c) * plane;
      sum_dy += lane_sum(dy.data() + base, plane);
      sum_dy_xc += lane_dot_dev(dy.data() + base, x.data() + base, plane, m);
    }
    const double sum_dy_xhat = sum_dy_xc * inv;
    if (!dgamma.empty()) dgamma[c] += static_cast<Real>(sum_dy_xhat);
    if (!dbeta.empty()) dbeta[c] += static_cast<Real>(sum_dy);
    if (dx.empty()) continue;
    const double k = gamma[c] * inv;
    // dx = k * (dy - sum_dy/count - xhat * sum_dy_xhat/count) = a*dy + b*(x - mean) + c0.
    const Real a = static_cast<Real>(k);
    const Real b = batch_stats ? static_cast<Real>(-k * inv * sum_dy_xhat / count) : Real(0);
    const Real c0 = batch_stats ? static_cast<Real>(-k * sum_dy / count) : Real(0);
    const Real mf = static_cast<Real>(m);
    for (int n = 0; n < d.batch; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * d.channels + c) * plane;
      const Real* xp = x.data() + base;
      const Real* gp = dy.data() + base;
      Real* out = dx.data() + base;
      for (std::size_t i = 0; i < plane; ++i) out[i] += a * gp[i] + b * (xp[i] - mf) + c0;
    }
  }
}

}  // namespace kernels
}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
