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
#include <optional>
#include <string>
#include <vector>

#include "effv2/arch/spec.hpp"
#include "effv2/common/rng.hpp"
#include "effv2/tensor/ops.hpp"

namespace effv2::arch {

struct ForwardOptions {
  Mode mode = Mode::kEval;
  double dropout_rate = 0.0;        // head dropout before the classifier
  double survival_prob = 1.0;       // stochastic depth on residual blocks
  double bn_momentum = 0.99;
  Philox* rng = nullptr;            // required in train mode
};

struct Parameter {
  std::string name;
  Tensor tensor;
  bool weight_decay = true;  // false for BN affine params and biases
};

// An ArchSpec bound to initialized tensors. Weights are independent of
// image size, so one model runs at any input resolution.
class Model {
 public:
  // Conv weights ~ N(0, 2 / fan_out), FC weights ~ U(+-1/sqrt(fan_in)),
  // BN gamma = 1, beta = 0, biases 0.
  static Model instantiate(const ArchSpec& arch, Philox& rng);

  // images: [n, 3, s, s] -> logits [n, num_classes, 1, 1].
  Tensor forward(const Tensor& images, const ForwardOptions& options);

  const ArchSpec& arch() const { return arch_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  // Running BN statistics, named "<layer>.running_mean" / ".running_var".
  std::vector<NamedTensor> buffers() const;

  std::int64_t num_parameters() const;
  void zero_grad();
  // Deep copy with independent storage.
  Model clone() const;

 private:
  struct ConvUnit {
    std::size_t weight = 0;
    std::size_t gamma = 0;
    std::size_t beta = 0;
    std::size_t stats = 0;
    int stride = 1;
    bool depthwise = false;
    bool activation = true;
  };
  struct SqueezeExcite {
    std::size_t reduce_w = 0, reduce_b = 0, expand_w = 0, expand_b = 0;
  };
  struct Block {
    std::optional<ConvUnit> expand;
    ConvUnit main;
    std::optional<SqueezeExcite> se;
    std::optional<ConvUnit> project;
    bool residual = false;
  };

  Tensor run(const ConvUnit& unit, const Tensor& x, const ForwardOptions& options);
  std::size_t add_param(std::string name, Tensor t, bool decay);
  ConvUnit add_conv(const std::string& prefix, int cin, int cout, int k, int stride,
                    bool depthwise, bool activation, Philox& rng);

  ArchSpec arch_;
  std::vector<Parameter> params_;
  std::vector<std::string> stats_names_;
  std::vector<BatchNormStats> stats_;
  ConvUnit stem_;
  std::vector<Block> blocks_;
  ConvUnit head_conv_;
  std::size_t fc_weight_ = 0;
  std::size_t fc_bias_ = 0;
};

}  // namespace effv2::arch
