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

#include "effv2/train/optim.hpp"

#include <cmath>

#include "effv2/common/error.hpp"

namespace effv2::train {

RmsPropState RmsPropState::zeros(const std::vector<arch::Parameter>& params) {
  RmsPropState s;
  for (const auto& p : params) {
    s.accumulator.emplace_back(p.tensor.numel(), Real(0));
    s.momentum.emplace_back(p.tensor.numel(), Real(0));
  }
  return s;
}

void rmsprop_step(std::vector<arch::Parameter>& params, RmsPropState& state, double lr, const RmsPropConfig& cfg) {
  if (state.accumulator.size() != params.size()) throw ShapeError("optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto grad = params[i].tensor.grad();
    for (Real g : grad) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in '" + params[i].name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto w = p.tensor.mutable_data();
    const auto grad = p.tensor.grad();
    const bool has_grad = !grad.empty();
    const double wd = p.weight_decay ? cfg.weight_decay : 0.0;
    auto& acc = state.accumulator[i];
    auto& mom = state.momentum[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = (has_grad ? double(grad[k]) : 0.0) + wd * w[k];
      const double a = cfg.decay * acc[k] + (1.0 - cfg.decay) * g * g;
      const double m = cfg.momentum * mom[k] + lr * g / std::sqrt(a + cfg.epsilon);
      acc[k] = static_cast<Real>(a);
      mom[k] = static_cast<Real>(m);
      w[k] = static_cast<Real>(w[k] - m);
    }
  }
}

std::vector<Tensor> ema_init(const std::vector<arch::Parameter>& params) {
  std::vector<Tensor> shadow;
  shadow.reserve(params.size());
  for (const auto& p : params) shadow.push_back(p.tensor.clone().set_requires_grad(false));
  return shadow;
}

void ema_update(std::vector<Tensor>& shadow, const std::vector<arch::Parameter>& params, double decay) {
  if (shadow.size() != params.size()) throw ShapeError("EMA shadow does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto s = shadow[i].mutable_data();
    const auto p = params[i].tensor.data();
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<Real>(decay * s[k] + (1.0 - decay) * p[k]);
  }
}

arch::Model with_parameters(const arch::Model& model, const std::vector<Tensor>& values) {
  arch::Model copy = model.clone();
  auto& params = copy.parameters();
  if (values.size() != params.size()) throw ShapeError("parameter value list does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_data();
    const auto src = values[i].data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return copy;
}

}  // namespace effv2::train
