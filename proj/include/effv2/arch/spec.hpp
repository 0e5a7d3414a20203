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
#include <set>
#include <string>
#include <vector>

namespace effv2::arch {

enum class OpType { kConv, kMBConv, kFusedMBConv, kHead };

std::string to_string(OpType op);
OpType op_type_from_string(const std::string& name);

struct BlockSpec {
  OpType op = OpType::kMBConv;
  int expansion = 1;
  int kernel = 3;
  int stride = 1;
  int out_channels = 0;
  int num_layers = 1;
  double se_ratio = 0.0;  // 0 disables squeeze-and-excitation

  bool operator==(const BlockSpec&) const = default;
};

struct ArchSpec {
  std::string name;
  BlockSpec stem;                 // Conv3x3, stride 2
  std::vector<BlockSpec> stages;  // numbered 1..N; the stem is stage 0
  BlockSpec head;                 // Conv1x1 + pooling + FC
  int num_classes = 1000;
  int default_image_size = 224;

  bool operator==(const ArchSpec&) const = default;
};

// Throws ValidationError listing every problem found.
void validate(const ArchSpec& arch);

// Channels of the SE bottleneck: max(1, round(block_in * ratio)).
int se_channels(int block_in_channels, double se_ratio);

// Residual applies only to stride-1 layers that keep the channel count.
inline bool has_residual(int in_channels, int out_channels, int stride) {
  return stride == 1 && in_channels == out_channels;
}

// Nearest multiple of 8, never below 8.
int round_channels(double channels);

inline constexpr int kMaxInferenceImageSize = 480;

struct ScalingCoeffs {
  double width_mult = 1.0;
  double depth_mult = 1.0;
  // Requested inference size; 0 keeps the arch's own. Capped at 480.
  int image_size = 0;
  // Extra layers per stage (index 0 = stage 1); missing entries are 0.
  std::vector<int> late_stage_extra_layers;
};

// Width: channels * width_mult rounded to a multiple of 8 (identity at 1.0).
// Depth: ceil(layers * depth_mult) + extra layers. Image size capped at 480.
ArchSpec scale(const ArchSpec& arch, const ScalingCoeffs& coeffs);

// Replaces MBConv with Fused-MBConv (same expansion, kernel, channels, no SE)
// in the given 1-based stages.
ArchSpec fuse_stages(const ArchSpec& arch, const std::set<int>& stages);

// EfficientNetV2-S exactly as in its published stage table.
ArchSpec efficientnetv2_s(int num_classes = 1000);

// EfficientNet-V1 B0..B7 from the B0 stage table and the published
// (width, depth, resolution) coefficients.
ArchSpec efficientnet_v1(int variant, int num_classes = 1000);
ArchSpec efficientnet_v1(const std::string& variant, int num_classes = 1000);

// Small V2-style network (< 1M params) for desk-scale training runs.
ArchSpec efficientnetv2_desk(int num_classes = 10);

// Named presets: v2-s, v2-desk, b0..b7, b4-fused1-3, b4-fused1-5, b4-fused1-7.
ArchSpec preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace effv2::arch
