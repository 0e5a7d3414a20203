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

#include <array>
#include <cmath>

#include "effv2/arch/spec.hpp"
#include "effv2/common/error.hpp"

namespace effv2::arch {
namespace {

BlockSpec stem(int channels) { return {OpType::kConv, 1, 3, 2, channels, 1, 0.0}; }
BlockSpec head(int channels) { return {OpType::kHead, 1, 1, 1, channels, 1, 0.0}; }
BlockSpec mb(int e, int k, int s, int c, int n, double se = 0.25) {
  return {OpType::kMBConv, e, k, s, c, n, se};
}
BlockSpec fused(int e, int k, int s, int c, int n) { return {OpType::kFusedMBConv, e, k, s, c, n, 0.0}; }

struct V1Coeffs {
  double width;
  double depth;
  int resolution;
};

constexpr std::array<V1Coeffs, 8> kV1Coeffs = {{
    {1.0, 1.0, 224}, {1.0, 1.1, 240}, {1.1, 1.2, 260}, {1.2, 1.4, 300},
    {1.4, 1.8, 380}, {1.6, 2.2, 456}, {1.8, 2.6, 528}, {2.0, 3.1, 600},
}};

}  // namespace

ArchSpec efficientnetv2_s(int num_classes) {
  ArchSpec a;
  a.name = "efficientnetv2-s";
  a.stem = stem(24);
  a.stages = {
      fused(1, 3, 1, 24, 2),
      fused(4, 3, 2, 48, 4),
      fused(4, 3, 2, 64, 4),
      mb(4, 3, 2, 128, 6),
      mb(6, 3, 1, 160, 9),
      mb(6, 3, 2, 256, 15),
  };
  a.head = head(1280);
  a.num_classes = num_classes;
  // Training tops out at 300 px, about 20% below inference.
  a.default_image_size = 384;
  return a;
}

ArchSpec efficientnet_v1(int variant, int num_classes) {
  if (variant < 0 || variant > 7) {
    throw ValidationError("unknown EfficientNet variant b" + std::to_string(variant));
  }
  const V1Coeffs k = kV1Coeffs[static_cast<std::size_t>(variant)];
  const std::array<BlockSpec, 7> b0 = {
      mb(1, 3, 1, 16, 1), mb(6, 3, 2, 24, 2), mb(6, 5, 2, 40, 2),  mb(6, 3, 2, 80, 3),
      mb(6, 5, 1, 112, 3), mb(6, 5, 2, 192, 4), mb(6, 3, 1, 320, 1),
  };
  auto width = [&](int c) { return k.width == 1.0 ? c : round_channels(c * k.width); };
  ArchSpec a;
  a.name = "efficientnet-b" + std::to_string(variant);
  a.stem = stem(width(32));
  for (BlockSpec b : b0) {
    b.out_channels = width(b.out_channels);
    b.num_layers = static_cast<int>(std::ceil(b.num_layers * k.depth - 1e-9));
    a.stages.push_back(b);
  }
  a.head = head(width(1280));
  a.num_classes = num_classes;
  a.default_image_size = k.resolution;
  return a;
}

ArchSpec efficientnet_v1(const std::string& variant, int num_classes) {
  if (variant.size() == 2 && (variant[0] == 'b' || variant[0] == 'B') && variant[1] >= '0' &&
      variant[1] <= '7') {
    return efficientnet_v1(variant[1] - '0', num_classes);
  }
  throw ValidationError("unknown EfficientNet variant '" + variant + "'");
}

ArchSpec efficientnetv2_desk(int num_classes) {
  ArchSpec a;
  a.name = "efficientnetv2-desk";
  a.stem = stem(16);
  a.stages = {
      fused(1, 3, 1, 16, 1),
      fused(4, 3, 2, 24, 1),
      fused(4, 3, 2, 32, 1),
      mb(4, 3, 2, 64, 1),
      mb(6, 3, 1, 80, 1),
      mb(6, 3, 2, 128, 1),
  };
  a.head = head(512);
  a.num_classes = num_classes;
  a.default_image_size = 64;
  return a;
}

std::vector<std::string> preset_names() {
  return {"v2-s", "v2-desk", "b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7",
          "b4-fused1-3", "b4-fused1-5", "b4-fused1-7"};
}

ArchSpec preset(const std::string& name) {
  if (name == "v2-s") return efficientnetv2_s();
  if (name == "v2-desk") return efficientnetv2_desk();
  if (name == "b4-fused1-3" || name == "b4-fused1-5" || name == "b4-fused1-7") {
    const int last = name.back() - '0';
    std::set<int> stages;
    for (int s = 1; s <= last; ++s) stages.insert(s);
    ArchSpec a = fuse_stages(efficientnet_v1(4), stages);
    a.name = "efficientnet-" + name;
    return a;
  }
  if (name.size() == 2 && name[0] == 'b') return efficientnet_v1(name);
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw ValidationError("unknown preset '" + name + "' (known:" + known + ")");
}

}  // namespace effv2::arch
