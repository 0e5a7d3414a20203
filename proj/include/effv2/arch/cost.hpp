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

#include <cstdint>
#include <string>
#include <vector>

#include "effv2/arch/spec.hpp"

namespace effv2::arch {

// FLOPs here are multiply-accumulates: a k x k conv costs
// out_h * out_w * cout * cin * k * k (cin = 1 per output channel for
// depthwise), FC costs in * out, and pooling, SE gating, activations and
// residual adds cost one per element. Inference batch norm folds into the
// preceding conv and costs nothing.
struct StageCost {
  std::string name;  // "stem", "stage1".., "head"
  std::int64_t params = 0;
  std::int64_t flops = 0;
  int out_channels = 0;
  int out_size = 0;  // spatial side at the stage output (0 for params-only reports)
};

struct CostReport {
  std::int64_t params = 0;
  std::int64_t flops = 0;
  int image_size = 0;
  std::vector<StageCost> per_stage;
};

// A single bias-free conv layer at a square output of side out_side.
struct LayerCost {
  std::int64_t params = 0;
  std::int64_t flops = 0;
};
LayerCost conv_layer_cost(int in_channels, int out_channels, int kernel, int out_side,
                          bool depthwise);

// Trainable scalars: conv/FC weights, biases and BN (gamma, beta).
CostReport count_params(const ArchSpec& arch);
// Params and MACs at a square input of side image_size (>= 32).
CostReport count_flops(const ArchSpec& arch, int image_size);

// Rough peak training memory in bytes: all activations kept for backward
// plus parameters, gradients and optimizer slots.
std::int64_t estimate_training_bytes(const ArchSpec& arch, int image_size, int batch);

}  // namespace effv2::arch
