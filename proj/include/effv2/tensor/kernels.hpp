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

#include <span>

#include "effv2/tensor/tensor.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {

enum class Padding { kSame, kValid };

struct ConvGeometry {
  int batch = 1;
  int in_channels = 1;
  int in_h = 1;
  int in_w = 1;
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int groups = 1;
  int pad_top = 0;
  int pad_left = 0;
  int out_h = 1;
  int out_w = 1;

  // Validates and derives output geometry. `same` pads (k-1) in total per
  // axis with the odd pixel on the bottom/right, giving ceil(in/stride).
  static ConvGeometry make(const Shape& input, const Shape& weight, int stride, Padding padding,
                           int groups);

  int in_per_group() const { return in_channels / groups; }
  int out_per_group() const { return out_channels / groups; }
};

struct BatchNormDims {
  int batch = 1;
  int channels = 1;
  int plane = 1;
};

// Two implementations with identical contracts: `kernels` is the
// OpenMP-parallel path used by the ops, `reference` is a plain serial
// transcription kept for testing and benchmarking. Backward kernels
// accumulate into their outputs.
namespace kernels {

void conv2d_forward(const ConvGeometry& g, std::span<const Real> x, std::span<const Real> w,
                    std::span<Real> y);
void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> dy,
                           std::span<const Real> w, std::span<Real> dx);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> x,
                            std::span<const Real> dy, std::span<Real> dw);

// Normalizes with batch statistics; writes per-channel mean and 1/sqrt(var+eps).
void batch_norm_forward_train(const BatchNormDims& d, std::span<const Real> x,
                              std::span<const Real> gamma, std::span<const Real> beta, double eps,
                              std::span<Real> y, std::span<double> mean, std::span<double> invstd);
void batch_norm_forward_eval(const BatchNormDims& d, std::span<const Real> x,
                             std::span<const Real> gamma, std::span<const Real> beta,
                             std::span<const double> mean, std::span<const double> invstd,
                             std::span<Real> y);
// `batch_stats` selects the train-mode gradient (statistics depend on x).
void batch_norm_backward(const BatchNormDims& d, std::span<const Real> x,
                         std::span<const Real> dy, std::span<const Real> gamma,
                         std::span<const double> mean, std::span<const double> invstd,
                         bool batch_stats, std::span<Real> dx, std::span<Real> dgamma,
                         std::span<Real> dbeta);

}  // namespace kernels

namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const Real> x, std::span<const Real> w,
                    std::span<Real> y);
void conv2d_backward_input(const ConvGeometry& g, std::span<const Real> dy,
                           std::span<const Real> w, std::span<Real> dx);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const Real> x,
                            std::span<const Real> dy, std::span<Real> dw);
void batch_norm_forward_train(const BatchNormDims& d, std::span<const Real> x,
                              std::span<const Real> gamma, std::span<const Real> beta, double eps,
                              std::span<Real> y, std::span<double> mean, std::span<double> invstd);
void batch_norm_forward_eval(const BatchNormDims& d, std::span<const Real> x,
                             std::span<const Real> gamma, std::span<const Real> beta,
                             std::span<const double> mean, std::span<const double> invstd,
                             std::span<Real> y);
void batch_norm_backward(const BatchNormDims& d, std::span<const Real> x,
                         std::span<const Real> dy, std::span<const Real> gamma,
                         std::span<const double> mean, std::span<const double> invstd,
                         bool batch_stats, std::span<Real> dx, std::span<Real> dgamma,
                         std::span<Real> dbeta);

}  // namespace reference

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
