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

#include <array>
#include <string>
#include <vector>

#include "effv2/common/rng.hpp"
#include "effv2/data/image.hpp"
#include "effv2/tensor/tensor.hpp"

namespace effv2::data {

struct AugmentConfig {
  double randaug_magnitude = 0.0;  // epsilon in [0, 30]
  int randaug_num_ops = 2;
  double mixup_alpha = 0.0;
  int cutout_size = 0;
};

void validate(const AugmentConfig& cfg);

inline constexpr double kMaxMagnitude = 30.0;

enum class AugOp { kRotate, kTranslateX, kTranslateY, kShearX, kShearY, kBrightness, kContrast, kPosterize };
inline constexpr std::array<AugOp, 8> kAugOps = {AugOp::kRotate,     AugOp::kTranslateX, AugOp::kTranslateY,
                                                 AugOp::kShearX,     AugOp::kShearY,     AugOp::kBrightness,
                                                 AugOp::kContrast,   AugOp::kPosterize};

std::string to_string(AugOp op);

// Unsigned strength for magnitude eps: degrees for rotate, fraction of the side for
// translate, shear factor, blend delta for brightness/contrast, bits removed for posterize.
double op_strength(AugOp op, double magnitude);

// Applies one op with a signed strength. Zero strength returns the input unchanged.
Image apply_op(const Image& image, AugOp op, double signed_strength);

struct AppliedOp {
  AugOp op;
  double strength;  // signed
};

// Applies num_ops uniformly drawn ops. Output is clamped to [0, 1].
Image randaugment(const Image& image, double magnitude, int num_ops, Philox& rng,
                  std::vector<AppliedOp>* trace = nullptr);

// Zeroes one size x size square centred uniformly in the image, clipped at the borders.
Image cutout(const Image& image, int size, Philox& rng);

struct MixupBatch {
  Tensor images;
  Tensor labels;
  double lambda = 0.0;
  std::vector<std::size_t> partner;
};

// One lambda ~ Beta(alpha, alpha) per batch; x_i <- lambda * x_perm(i) + (1 - lambda) * x_i.
MixupBatch mixup(const Tensor& images, const Tensor& labels, double alpha, Philox& rng);
MixupBatch mixup_with_lambda(const Tensor& images, const Tensor& labels, double lambda,
                             std::vector<std::size_t> partner);

// [n, num_classes, 1, 1] one-hot rows.
Tensor one_hot(const std::vector<int>& labels, int num_classes);

// Stacks equally sized images into an NCHW tensor.
Tensor stack(const std::vector<Image>& images);

}  // namespace effv2::data
