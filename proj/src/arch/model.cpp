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

#include "effv2/arch/model.hpp"

#include <cmath>

#include "effv2/common/error.hpp"

namespace effv2::arch {
namespace {

Tensor gaussian(Shape s, double stddev, Philox& rng) {
  std::vector<Real> v(s.numel());
  for (auto& x : v) x = static_cast<Real>(rng.normal() * stddev);
  return Tensor(s, std::move(v));
}

Tensor uniform(Shape s, double bound, Philox& rng) {
  std::vector<Real> v(s.numel());
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-bound, bound));
  return Tensor(s, std::move(v));
}

}  // namespace

std::size_t Model::add_param(std::string name, Tensor t, bool decay) {
  t.set_requires_grad(true);
  params_.push_back({std::move(name), std::move(t), decay});
  return params_.size() - 1;
}

Model::ConvUnit Model::add_conv(const std::string& prefix, int cin, int cout, int k, int stride,
                                bool depthwise, bool activation, Philox& rng) {
  ConvUnit u;
  u.stride = stride;
  u.depthwise = depthwise;
  u.activation = activation;
  const Shape ws{cout, depthwise ? 1 : cin, k, k};
  const double fan_out = static_cast<double>(k) * k * (depthwise ? 1 : cout);
  u.weight = add_param(prefix + ".conv.weight", gaussian(ws, std::sqrt(2.0 / fan_out), rng), true);
  u.gamma = add_param(prefix + ".bn.gamma", Tensor(Shape{1, cout, 1, 1}, Real(1)), false);
  u.beta = add_param(prefix + ".bn.beta", Tensor(Shape{1, cout, 1, 1}, Real(0)), false);
  stats_.push_back(BatchNormStats::fresh(cout));
  stats_names_.push_back(prefix + ".bn");
  u.stats = stats_.size() - 1;
  return u;
}

Model Model::instantiate(const ArchSpec& arch, Philox& rng) {
  validate(arch);
  Model m;
  m.arch_ = arch;
  m.stem_ = m.add_conv("stem", 3, arch.stem.out_channels, arch.stem.kernel, arch.stem.stride,
                       false, true, rng);
  int cin = arch.stem.out_channels;
  for (std::size_t s = 0; s < arch.stages.size(); ++s) {
    const BlockSpec& b = arch.stages[s];
    for (int layer = 0; layer < b.num_layers; ++layer) {
      const std::string prefix = "stages." + std::to_string(s + 1) + "." + std::to_string(layer);
      const int stride = layer == 0 ? b.stride : 1;
      const int mid = cin * b.expansion;
      Block blk;
      int gated = mid;
      if (b.op == OpType::kMBConv) {
        if (b.expansion != 1) blk.expand = m.add_conv(prefix + ".expand", cin, mid, 1, 1, false, true, rng);
        blk.main = m.add_conv(prefix + ".dw", mid, mid, b.kernel, stride, true, true, rng);
        blk.project = m.add_conv(prefix + ".project", mid, b.out_channels, 1, 1, false, false, rng);
      } else if (b.expansion == 1) {
        blk.main = m.add_conv(prefix + ".fused", cin, b.out_channels, b.kernel, stride, false, true, rng);
        gated = b.out_channels;
      } else {
        blk.main = m.add_conv(prefix + ".fused", cin, mid, b.kernel, stride, false, true, rng);
        blk.project = m.add_conv(prefix + ".project", mid, b.out_channels, 1, 1, false, false, rng);
      }
      if (b.se_ratio > 0) {
        const int r = se_channels(cin, b.se_ratio);
        SqueezeExcite se;
        se.reduce_w = m.add_param(prefix + ".se.reduce.weight",
                                  gaussian({r, gated, 1, 1}, std::sqrt(2.0 / r), rng), true);
        se.reduce_b = m.add_param(prefix + ".se.reduce.bias", Tensor(Shape{1, r, 1, 1}), false);
        se.expand_w = m.add_param(prefix + ".se.expand.weight",
                                  gaussian({gated, r, 1, 1}, std::sqrt(2.0 / gated), rng), true);
        se.expand_b = m.add_param(prefix + ".se.expand.bias", Tensor(Shape{1, gated, 1, 1}), false);
        blk.se = se;
      }
      blk.residual = has_residual(cin, b.out_channels, stride);
      m.blocks_.push_back(blk);
      cin = b.out_channels;
    }
  }
  m.head_conv_ = m.add_conv("head", cin, arch.head.out_channels, 1, 1, false, true, rng);
  const int features = arch.head.out_channels;
  m.fc_weight_ = m.add_param("head.fc.weight",
                             uniform({arch.num_classes, features, 1, 1}, 1.0 / std::sqrt(features), rng),
                             true);
  m.fc_bias_ = m.add_param("head.fc.bias", Tensor(Shape{1, arch.num_classes, 1, 1}), false);
  return m;
}

Tensor Model::run(const ConvUnit& unit, const Tensor& x, const ForwardOptions& options) {
  const Tensor& w = params_[unit.weight].tensor;
  Tensor y = unit.depthwise ? depthwise_conv2d(x, w, unit.stride, Padding::kSame)
                            : conv2d(x, w, unit.stride, Padding::kSame);
  y = batch_norm(y, params_[unit.gamma].tensor, params_[unit.beta].tensor, stats_[unit.stats],
                 options.mode, options.bn_momentum);
  return unit.activation ? silu(y) : y;
}

Tensor Model::forward(const Tensor& images, const ForwardOptions& options) {
  if (images.shape().c != 3) {
    throw ShapeError("model input must have 3 channels, got " + images.shape().str());
  }
  if (options.mode == Mode::kTrain && options.rng == nullptr) {
    throw ValidationError("train-mode forward needs an rng");
  }
  Philox eval_rng(0);
  Philox& rng = options.rng != nullptr ? *options.rng : eval_rng;

  Tensor x = run(stem_, images, options);
  for (const Block& blk : blocks_) {
    Tensor h = x;
    if (blk.expand) h = run(*blk.expand, h, options);
    h = run(blk.main, h, options);
    if (blk.se) {
      const SqueezeExcite& se = *blk.se;
      Tensor s = global_avg_pool(h);
      s = silu(fully_connected(s, params_[se.reduce_w].tensor, params_[se.reduce_b].tensor));
      s = sigmoid(fully_connected(s, params_[se.expand_w].tensor, params_[se.expand_b].tensor));
      h = scale_channels(h, s);
    }
    if (blk.project) h = run(*blk.project, h, options);
    x = blk.residual ? stochastic_depth(h, x, options.survival_prob, options.mode, rng) : h;
  }
  x = run(head_conv_, x, options);
  x = global_avg_pool(x);
  x = dropout(x, options.dropout_rate, options.mode, rng);
  return fully_connected(x, params_[fc_weight_].tensor, params_[fc_bias_].tensor);
}

std::vector<NamedTensor> Model::buffers() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    out.push_back({stats_names_[i] + ".running_mean", stats_[i].running_mean});
    out.push_back({stats_names_[i] + ".running_var", stats_[i].running_var});
  }
  return out;
}

std::int64_t Model::num_parameters() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += static_cast<std::int64_t>(p.tensor.numel());
  return n;
}

void Model::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

Model Model::clone() const {
  Model m = *this;
  for (auto& p : m.params_) p.tensor = p.tensor.clone();
  for (auto& s : m.stats_) {
    s.running_mean = s.running_mean.clone();
    s.running_var = s.running_var.clone();
  }
  return m;
}

}  // namespace effv2::arch
