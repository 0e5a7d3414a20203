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

#include "effv2/arch/spec.hpp"

#include <cmath>
#include <sstream>

#include "effv2/common/error.hpp"

namespace effv2::arch {

std::string to_string(OpType op) {
  switch (op) {
    case OpType::kConv: return "conv";
    case OpType::kMBConv: return "mbconv";
    case OpType::kFusedMBConv: return "fused_mbconv";
    case OpType::kHead: return "head";
  }
  return "?";
}

OpType op_type_from_string(const std::string& name) {
  if (name == "conv") return OpType::kConv;
  if (name == "mbconv") return OpType::kMBConv;
  if (name == "fused_mbconv") return OpType::kFusedMBConv;
  if (name == "head") return OpType::kHead;
  throw ValidationError("unknown op type '" + name + "'");
}

int se_channels(int block_in_channels, double se_ratio) {
  return std::max(1, static_cast<int>(std::lround(block_in_channels * se_ratio)));
}

int round_channels(double channels) {
  return std::max(8, static_cast<int>(std::floor(channels / 8.0 + 0.5)) * 8);
}

void validate(const ArchSpec& arch) {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  check(arch.stem.op == OpType::kConv, "stem must be a conv");
  check(arch.stem.kernel == 3, "stem kernel must be 3");
  check(arch.stem.stride == 2, "stem stride must be 2");
  check(arch.stem.out_channels > 0, "stem channels must be positive");
  check(!arch.stages.empty(), "at least one stage is required");
  for (std::size_t i = 0; i < arch.stages.size(); ++i) {
    const BlockSpec& b = arch.stages[i];
    const std::string at = "stage " + std::to_string(i + 1) + ": ";
    check(b.op == OpType::kMBConv || b.op == OpType::kFusedMBConv,
          at + "op must be mbconv or fused_mbconv");
    check(b.expansion == 1 || b.expansion == 4 || b.expansion == 6,
          at + "expansion must be 1, 4 or 6");
    check(b.kernel == 3 || b.kernel == 5, at + "kernel must be 3 or 5");
    check(b.stride == 1 || b.stride == 2, at + "stride must be 1 or 2");
    check(b.out_channels > 0, at + "channels must be positive");
    check(b.num_layers > 0, at + "layer count must be positive");
    check(b.se_ratio >= 0.0 && b.se_ratio <= 1.0, at + "se_ratio must be in [0, 1]");
  }
  check(arch.head.op == OpType::kHead, "head op must be head");
  check(arch.head.out_channels > 0, "head channels must be positive");
  check(arch.num_classes >= 1, "num_classes must be >= 1");
  check(arch.default_image_size >= 32, "default_image_size must be >= 32");
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid architecture '" << arch.name << "':";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ValidationError(msg.str());
  }
}

ArchSpec scale(const ArchSpec& arch, const ScalingCoeffs& coeffs) {
  if (coeffs.width_mult < 1.0 || coeffs.depth_mult < 1.0) {
    throw ValidationError("scaling coefficients must be >= 1");
  }
  for (int extra : coeffs.late_stage_extra_layers) {
    if (extra < 0) throw ValidationError("extra layers must be non-negative");
  }
  if (coeffs.late_stage_extra_layers.size() > arch.stages.size()) {
    throw ValidationError("more extra-layer entries than stages");
  }
  auto width = [&](int c) {
    return coeffs.width_mult == 1.0 ? c : round_channels(c * coeffs.width_mult);
  };
  ArchSpec out = arch;
  out.stem.out_channels = width(arch.stem.out_channels);
  out.head.out_channels = width(arch.head.out_channels);
  for (std::size_t i = 0; i < out.stages.size(); ++i) {
    BlockSpec& b = out.stages[i];
    b.out_channels = width(b.out_channels);
    b.num_layers = static_cast<int>(std::ceil(b.num_layers * coeffs.depth_mult - 1e-9));
    if (i < coeffs.late_stage_extra_layers.size()) b.num_layers += coeffs.late_stage_extra_layers[i];
  }
  const int requested = coeffs.image_size > 0 ? coeffs.image_size : arch.default_image_size;
  out.default_image_size = std::min(requested, kMaxInferenceImageSize);
  return out;
}

ArchSpec fuse_stages(const ArchSpec& arch, const std::set<int>& stages) {
  ArchSpec out = arch;
  for (int s : stages) {
    if (s < 1 || s > static_cast<int>(arch.stages.size())) {
      throw ValidationError("stage index " + std::to_string(s) + " out of range 1.." +
                            std::to_string(arch.stages.size()));
    }
    BlockSpec& b = out.stages[static_cast<std::size_t>(s - 1)];
    b.op = OpType::kFusedMBConv;
    b.se_ratio = 0.0;
  }
  return out;
}

}  // namespace effv2::arch
