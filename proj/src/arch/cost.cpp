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

#include "effv2/arch/cost.hpp"

#include "effv2/common/error.hpp"

namespace effv2::arch {
namespace {

std::int64_t sq(int side) { return static_cast<std::int64_t>(side) * side; }

struct Tally {
  std::int64_t params = 0;
  std::int64_t flops = 0;
  std::int64_t activations = 0;  // elements written per image
};

int out_side(int side, int stride) { return (side + stride - 1) / stride; }

// k x k conv + BN (+ activation).
void conv_bn(Tally& t, int cin, int cout, int k, int out, bool depthwise, bool act) {
  const LayerCost conv = conv_layer_cost(cin, cout, k, out, depthwise);
  t.params += conv.params + 2LL * cout;
  t.flops += conv.flops;
  t.activations += 2 * sq(out) * cout;  // conv output and BN output
  if (act) {
    t.flops += sq(out) * cout;
    t.activations += sq(out) * cout;
  }
}

void squeeze_excite(Tally& t, int channels, int reduced, int side) {
  t.params += static_cast<std::int64_t>(channels) * reduced + reduced;  // reduce FC
  t.params += static_cast<std::int64_t>(reduced) * channels + channels; // expand FC
  t.flops += sq(side) * channels;                                       // pool
  t.flops += 2LL * channels * reduced + reduced + channels;             // FCs + activations
  t.flops += sq(side) * channels;                                       // gating
  t.activations += sq(side) * channels + 2LL * channels + 2LL * reduced;
}

void block(Tally& t, const BlockSpec& b, int cin, int stride, int in_side) {
  const int out = out_side(in_side, stride);
  const int mid = cin * b.expansion;
  const int se = b.se_ratio > 0 ? se_channels(cin, b.se_ratio) : 0;
  if (b.op == OpType::kMBConv) {
    if (b.expansion != 1) conv_bn(t, cin, mid, 1, in_side, false, true);
    conv_bn(t, mid, mid, b.kernel, out, true, true);
    if (se > 0) squeeze_excite(t, mid, se, out);
    conv_bn(t, mid, b.out_channels, 1, out, false, false);
  } else if (b.expansion == 1) {
    conv_bn(t, cin, b.out_channels, b.kernel, out, false, true);
    if (se > 0) squeeze_excite(t, b.out_channels, se, out);
  } else {
    conv_bn(t, cin, mid, b.kernel, out, false, true);
    if (se > 0) squeeze_excite(t, mid, se, out);
    conv_bn(t, mid, b.out_channels, 1, out, false, false);
  }
  if (has_residual(cin, b.out_channels, stride)) {
    t.flops += sq(out) * b.out_channels;
    t.activations += sq(out) * b.out_channels;
  }
}

CostReport analyze(const ArchSpec& arch, int image_size, std::int64_t* activations) {
  validate(arch);
  CostReport report;
  report.image_size = image_size;
  std::int64_t total_act = sq(image_size) * 3;
  int side = image_size;

  Tally stem;
  side = out_side(side, arch.stem.stride);
  conv_bn(stem, 3, arch.stem.out_channels, arch.stem.kernel, side, false, true);
  report.per_stage.push_back({"stem", stem.params, stem.flops, arch.stem.out_channels, side});
  total_act += stem.activations;

  int cin = arch.stem.out_channels;
  for (std::size_t i = 0; i < arch.stages.size(); ++i) {
    const BlockSpec& b = arch.stages[i];
    Tally t;
    for (int layer = 0; layer < b.num_layers; ++layer) {
      const int stride = layer == 0 ? b.stride : 1;
      block(t, b, cin, stride, side);
      side = out_side(side, stride);
      cin = b.out_channels;
    }
    report.per_stage.push_back(
        {"stage" + std::to_string(i + 1), t.params, t.flops, b.out_channels, side});
    total_act += t.activations;
  }

  Tally h;
  conv_bn(h, cin, arch.head.out_channels, 1, side, false, true);
  h.flops += sq(side) * arch.head.out_channels;  // pool
  h.params += static_cast<std::int64_t>(arch.head.out_channels) * arch.num_classes + arch.num_classes;
  h.flops += static_cast<std::int64_t>(arch.head.out_channels) * arch.num_classes;
  h.activations += arch.head.out_channels + arch.num_classes;
  report.per_stage.push_back({"head", h.params, h.flops, arch.num_classes, 1});
  total_act += h.activations;

  for (const auto& s : report.per_stage) {
    report.params += s.params;
    report.flops += s.flops;
  }
  if (activations != nullptr) *activations = total_act;
  return report;
}

}  // namespace

LayerCost conv_layer_cost(int in_channels, int out_channels, int kernel, int out_side,
                          bool depthwise) {
  const std::int64_t per_out =
      depthwise ? static_cast<std::int64_t>(kernel) * kernel
                : static_cast<std::int64_t>(in_channels) * kernel * kernel;
  return {per_out * out_channels, sq(out_side) * out_channels * per_out};
}

CostReport count_params(const ArchSpec& arch) {
  CostReport r = analyze(arch, arch.default_image_size, nullptr);
  r.flops = 0;
  r.image_size = 0;
  for (auto& s : r.per_stage) {
    s.flops = 0;
    s.out_size = 0;
  }
  return r;
}

CostReport count_flops(const ArchSpec& arch, int image_size) {
  if (image_size < 32) {
    throw ValidationError("image size must be >= 32, got " + std::to_string(image_size));
  }
  return analyze(arch, image_size, nullptr);
}

std::int64_t estimate_training_bytes(const ArchSpec& arch, int image_size, int batch) {
  std::int64_t activations = 0;
  const CostReport r = analyze(arch, std::max(image_size, 1), &activations);
  // Forward activations and their gradients; params, grads, two optimizer
  // slots and an EMA shadow.
  return 4 * (2 * activations * batch + 5 * r.params);
}

}  // namespace effv2::arch
