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

#include <vector>

#include "effv2/arch/model.hpp"

namespace effv2::train {

struct RmsPropConfig {
  double decay = 0.9;
  double momentum = 0.9;
  double epsilon = 1e-3;
  double weight_decay = 1e-5;
};

struct RmsPropState {
  std::vector<std::vector<Real>> accumulator;
  std::vector<std::vector<Real>> momentum;

  static RmsPropState zeros(const std::vector<arch::Parameter>& params);
};

// acc <- d*acc + (1-d)*g^2; mom <- m*mom + lr*g/sqrt(acc+eps); p <- p - mom.
// g includes weight_decay * p for parameters flagged for decay. Parameters without a
// gradient are treated as having a zero gradient. Throws NumericError on a
// non-finite gradient, naming the parameter.
void rmsprop_step(std::vector<arch::Parameter>& params, RmsPropState& state, double lr, const RmsPropConfig& cfg);

// shadow <- decay*shadow + (1-decay)*param. Shadows are plain tensors outside any tape.
std::vector<Tensor> ema_init(const std::vector<arch::Parameter>& params);
void ema_update(std::vector<Tensor>& shadow, const std::vector<arch::Parameter>& params, double decay);

// A copy of `model` whose parameters take the shadow values.
arch::Model with_parameters(const arch::Model& model, const std::vector<Tensor>& values);

}  // namespace effv2::train
