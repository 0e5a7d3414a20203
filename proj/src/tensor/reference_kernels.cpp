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

#include "effv2/tensor/kernels.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {
namespace reference {
namespace {

std::size_t index4(int n, int c, int h, int w, int channels, int height, int width) {
  return ((static_cast<std::size_t>(n) * channels + c) * height + h) * width + w;
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const Real> x, std::span<const Real> w,
                    std::span<Real> y) {
  const int cin_g = g.in_per_group();
  const int cout_g = g.out_per_group();
  for (int n = 0; n < g.batch; ++n) {
    for (int oc = 0; oc < g.out_channels; ++oc) {
      const int group = oc / cout_g;
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          double acc = 0.0;
          for (int icg = 0; icg < cin_g; ++icg) {
            const int ic = group * cin_g + icg;
            for (int ky = 0; ky < g.kernel_h; ++ky) {
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int iy = oy * g.stride - g.pad_top + ky;
                const int ix = ox * g.stride - g.pad_left + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += static_cast<double>(x[index4(n, ic, iy, ix, g.in_channels, g.in_h, g.in_w)]) *
                       w[index4(oc, icg, ky, kx, cin_g, g.kernel_h, g.kernel_w)];
              }
            }
          }
          y[index4(n, oc, oy, ox, g.out_channels, g.out_h, g.out_w)] = static_cast<Real>(acc);
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> dy,
                           std::span<const Real> w, std::span<Real> dx) {
  const int cin_g = g.in_per_group();
  const int cout_g = g.out_per_group();
  for (int n = 0; n < g.batch; ++n) {
    for (int oc = 0; oc < g.out_channels; ++oc) {
      const int group = oc / cout_g;
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          const Real grad = dy[index4(n, oc, oy, ox, g.out_channels, g.out_h, g.out_w)];
          for (int icg = 0; icg < cin_g; ++icg) {
            const int ic = group * cin_g + icg;
            for (int ky = 0; ky < g.kernel_h; ++ky) {
              for (int kx = 0; kx < g.kernel_w; ++kx) {
                const int iy = oy * g.stride - g.pad_top + ky;
                const int ix = ox * g.stride - g.pad_left + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                dx[index4(n, ic, iy, ix, g.in_channels, g.in_h, g.in_w)] +=
                    grad * w[index4(oc, icg, ky, kx, cin_g, g.kernel_h, g.kernel_w)];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> x,
                            std::span<const Real> dy, std::span<Real> dw) {
  const int cin_g = g.in_per_group();
  const int cout_g = g.out_per_group();
  for (int oc = 0; oc < g.out_channels; ++oc) {
    const int group = oc / cout_g;
    for (int icg = 0; icg < cin_g; ++icg) {
      const int ic = group * cin_g + icg;
      for (int ky = 0; ky < g.kernel_h; ++ky) {
        for (int kx = 0; kx < g.kernel_w; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < g.batch; ++n) {
            for (int oy = 0; oy < g.out_h; ++oy) {
              for (int ox = 0; ox < g.out_w; ++ox) {
                const int iy = oy * g.stride - g.pad_top + ky;
                const int ix = ox * g.stride - g.pad_left + kx;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += static_cast<double>(dy[index4(n, oc, oy, ox, g.out_channels, g.out_h, g.out_w)]) *
                       x[index4(n, ic, iy, ix, g.in_channels, g.in_h, g.in_w)];
              }
            }
          }
          dw[index4(oc, icg, ky, kx, cin_g, g.kernel_h, g.kernel_w)] += static_cast<Real>(acc);
        }
      }
    }
  }
}

void batch_norm_forward_train(const BatchNormDims& d, std::span<const Real> x,
                              std::span<const Real> gamma, std::span<const Real> beta, double eps,
                              std::span<Real> y, std::span<double> mean, std::span<double> invstd) {
  const double count = static_cast<double>(d.batch) * d.plane;
  for (int c = 0; c < d.channels; ++c) {
    double s = 0.0;
    for (int n = 0; n < d.batch; ++n)
      for (int i = 0; i < d.plane; ++i) s += x[index4(n, c, 0, i, d.channels, 1, d.plane)];
    const double m = s / count;
    double ss = 0.0;
    for (int n = 0; n < d.batch; ++n)
      for (int i = 0; i < d.plane; ++i) {
        const double dv = x[index4(n, c, 0, i, d.channels, 1, d.plane)] - m;
        ss += dv * dv;
      }
    mean[c] = m;
    invstd[c] = 1.0 / std::sqrt(ss / count + eps);
    for (int n = 0; n < d.batch; ++n)
      for (int i = 0; i < d.plane; ++i) {
        const std::size_t k = index4(n, c, 0, i, d.channels, 1, d.plane);
        y[k] = static_cast<Real>(gamma[c] * (x[k] - m) * invstd[c] + beta[c]);
      }
  }
}

void batch_norm_forward_eval(const BatchNormDims& d, std::span<const Real> x,
                             std::span<const Real> gamma, std::span<const Real> beta,
                             std::span<const double> mean, std::span<const double> invstd,
                             std::span<Real> y) {
  for (int n = 0; n < d.batch; ++n)
    for (int c = 0; c < d.channels; ++c)
      for (int i = 0; i < d.plane; ++i) {
        const std::size_t k = index4(n, c, 0, i, d.channels, 1, d.plane);
        y[k] = static_cast<Real>(gamma[c] * (x[k] - mean[c]) * invstd[c] + beta[c]);
      }
}

void batch_norm_backward(const BatchNormDims& d, std::span<const Real> x,
                         std::span<const Real> dy, std::span<const Real> gamma,
                         std::span<const double> mean, std::span<const double> invstd,
                         bool batch_stats, std::span<Real> dx, std::span<Real> dgamma,
                         std::span<Real> dbeta) {
  const double count = static_cast<double>(d.batch) * d.plane;
  for (int c = 0; c < d.channels; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < d.batch; ++n)
      for (int i = 0; i < d.plane; ++i) {
        const std::size_t k = index4(n, c, 0, i, d.channels, 1, d.plane);
        sum_dy += dy[k];
        sum_dy_xhat += dy[k] * (x[k] - mean[c]) * invstd[c];
      }
    if (!dgamma.empty()) dgamma[c] += static_cast<Real>(sum_dy_xhat);
    if (!dbeta.empty()) dbeta[c] += static_cast<Real>(sum_dy);
    if (dx.empty()) continue;
    for (int n = 0; n < d.batch; ++n)
      for (int i = 0; i < d.plane; ++i) {
        const std::size_t k = index4(n, c, 0, i, d.channels, 1, d.plane);
        const double xhat = (x[k] - mean[c]) * invstd[c];
        double g = dy[k];
        if (batch_stats) g -= (sum_dy + xhat * sum_dy_xhat) / count;
        dx[k] += static_cast<Real>(gamma[c] * invstd[c] * g);
      }
  }
}

}  // namespace reference
}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
