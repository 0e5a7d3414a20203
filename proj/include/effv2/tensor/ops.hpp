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

#include "effv2/common/rng.hpp"
#include "effv2/tensor/kernels.hpp"
#include "effv2/tensor/tape.hpp"
#include "effv2/tensor/tensor.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {

enum class Mode { kTrain, kEval };

// Differentiable operator set for MBConv / Fused-MBConv networks. Every op
// records onto Tape::active() when a tape is active and any input requires a
// gradient; the output then requires a gradient too.

// weight: [cout, cin/groups, kh, kw]. kh, kw in {1, 3, 5}; stride in {1, 2}.
Tensor conv2d(const Tensor& input, const Tensor& weight, int stride, Padding padding,
              int groups = 1);
// weight: [c, 1, kh, kw]; no cross-channel mixing.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight, int stride, Padding padding);

struct BatchNormStats {
  Tensor running_mean;  // [1, c, 1, 1]
  Tensor running_var;   // [1, c, 1, 1]

  static BatchNormStats fresh(int channels);
};

inline constexpr double kBatchNormEpsilon = 1e-3;

// Train mode normalizes by batch statistics and updates the running stats:
// running = momentum * running + (1 - momentum) * batch. Eval mode uses the
// running stats. gamma/beta: [1, c, 1, 1].
Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, Mode mode, double momentum,
                  double eps = kBatchNormEpsilon);

Tensor silu(const Tensor& input);
Tensor sigmoid(const Tensor& input);
Tensor global_avg_pool(const Tensor& input);
// input: [n, c, 1, 1]; weight: [out, c, 1, 1]; bias: [1, out, 1, 1] or undefined.
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// x: [n, c, h, w] scaled per (n, c) by gate: [n, c, 1, 1].
Tensor scale_channels(const Tensor& x, const Tensor& gate);
Tensor sum(const Tensor& input);

// Per-element inverted dropout. rate in [0, 1).
Tensor dropout(const Tensor& input, double rate, Mode mode, Philox& rng);

// Residual with per-sample block drop: train mode keeps the block output
// with probability `survival_prob` (rescaled by 1/p) and otherwise passes
// the block input through; eval mode is the plain residual sum.
Tensor stochastic_depth(const Tensor& block_output, const Tensor& block_input,
                        double survival_prob, Mode mode, Philox& rng);

// Mean softmax cross-entropy. targets: same shape as logits, rows are
// probability vectors (one-hot or mixup-softened).
Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& targets);

// Runs the tape backward from a scalar loss.
void backward(const Tensor& loss, Tape& tape);

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
