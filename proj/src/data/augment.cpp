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

#include "effv2/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "effv2/common/error.hpp"

namespace effv2::data {
namespace {

constexpr float kFill = 0.5f;

float sample(const Image& img, int c, double sx, double sy) {
  // (sx, sy) in pixel-centre coordinates.
  const double fx = sx - 0.5, fy = sy - 0.5;
  const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
  const double ax = fx - x0, ay = fy - y0;
  auto px = [&](int y, int x) { return (x < 0 || y < 0 || x >= img.width || y >= img.height) ? kFill : img.at(c, y, x); };
  const double top = px(y0, x0) * (1 - ax) + px(y0, x0 + 1) * ax;
  const double bot = px(y0 + 1, x0) * (1 - ax) + px(y0 + 1, x0 + 1) * ax;
  return static_cast<float>(top * (1 - ay) + bot * ay);
}

// Output pixel u (centred) reads from source m * u + t (centred).
Image warp(const Image& img, double m00, double m01, double m10, double m11, double tx, double ty) {
  Image out(img.channels, img.height, img.width);
  const double cx = img.width / 2.0, cy = img.height / 2.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double ux = x + 0.5 - cx, uy = y + 0.5 - cy;
      const double sx = m00 * ux + m01 * uy + tx + cx;
      const double sy = m10 * ux + m11 * uy + ty + cy;
      for (int c = 0; c < img.channels; ++c) out.at(c, y, x) = sample(img, c, sx, sy);
    }
  }
  return out;
}

void clamp01(Image& img) {
  for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace

void validate(const AugmentConfig& cfg) {
  std::vector<std::string> problems;
  if (!std::isfinite(cfg.randaug_magnitude) || cfg.randaug_magnitude < 0 || cfg.randaug_magnitude > kMaxMagnitude) {
    problems.push_back("randaug_magnitude must be in [0, 30]");
  }
  if (cfg.randaug_num_ops < 0) problems.push_back("randaug_num_ops must be >= 0");
  if (!std::isfinite(cfg.mixup_alpha) || cfg.mixup_alpha < 0) problems.push_back("mixup_alpha must be >= 0");
  if (cfg.cutout_size < 0) problems.push_back("cutout_size must be >= 0");
  if (!problems.empty()) {
    std::string msg = "invalid augmentation config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

std::string to_string(AugOp op) {
  switch (op) {
    case AugOp::kRotate: return "rotate";
    case AugOp::kTranslateX: return "translate_x";
    case AugOp::kTranslateY: return "translate_y";
    case AugOp::kShearX: return "shear_x";
    case AugOp::kShearY: return "shear_y";
    case AugOp::kBrightness: return "brightness";
    case AugOp::kContrast: return "contrast";
    case AugOp::kPosterize: return "posterize";
  }
  return "?";
}

double op_strength(AugOp op, double magnitude) {
  const double t = std::clamp(magnitude, 0.0, kMaxMagnitude) / kMaxMagnitude;
  switch (op) {
    case AugOp::kRotate: return 30.0 * t;
    case AugOp::kTranslateX:
    case AugOp::kTranslateY: return 0.3 * t;
    case AugOp::kShearX:
    case AugOp::kShearY: return 0.3 * t;
    case AugOp::kBrightness:
    case AugOp::kContrast: return 0.9 * t;
    case AugOp::kPosterize: return std::round(4.0 * t);
  }
  return 0.0;
}

Image apply_op(const Image& image, AugOp op, double s) {
  if (s == 0.0) return image;
  Image out;
  switch (op) {
    case AugOp::kRotate: {
      const double a = s * std::numbers::pi / 180.0;
      out = warp(image, std::cos(a), std::sin(a), -std::sin(a), std::cos(a), 0, 0);
      break;
    }
    case AugOp::kTranslateX: out = warp(image, 1, 0, 0, 1, -s * image.width, 0); break;
    case AugOp::kTranslateY: out = warp(image, 1, 0, 0, 1, 0, -s * image.height); break;
    case AugOp::kShearX: out = warp(image, 1, -s, 0, 1, 0, 0); break;
    case AugOp::kShearY: out = warp(image, 1, 0, -s, 1, 0, 0); break;
    case AugOp::kBrightness: {
      out = image;
      for (float& v : out.pixels) v = static_cast<float>(v * (1.0 + s));
      break;
    }
    case AugOp::kContrast: {
      out = image;
      double mean = 0.0;
      for (float v : image.pixels) mean += v;
      mean /= double(image.pixels.size());
      for (float& v : out.pixels) v = static_cast<float>(mean + (v - mean) * (1.0 + s));
      break;
    }
    case AugOp::kPosterize: {
      const int keep = 8 - static_cast<int>(std::abs(s));
      if (keep >= 8) return image;
      out = image;
      const int mask = 0xFF & ~((1 << (8 - keep)) - 1);
      for (float& v : out.pixels) {
        const int byte = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        v = (byte & mask) / 255.0f;
      }
      break;
    }
  }
  clamp01(out);
  return out;
}

Image randaugment(const Image& image, double magnitude, int num_ops, Philox& rng, std::vector<AppliedOp>* trace) {
  if (!(magnitude >= 0.0 && magnitude <= kMaxMagnitude)) {
    throw ValidationError("RandAugment magnitude must be in [0, 30]");
  }
  Image out = image;
  for (int i = 0; i < num_ops; ++i) {
    const AugOp op = kAugOps[rng.below(kAugOps.size())];
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double strength = op == AugOp::kPosterize ? op_strength(op, magnitude) : sign * op_strength(op, magnitude);
    if (trace) trace->push_back({op, strength});
    out = apply_op(out, op, strength);
  }
  return out;
}

Image cutout(const Image& image, int size, Philox& rng) {
  if (size < 0) throw ValidationError("cutout size must be >= 0");
  if (size > std::min(image.height, image.width)) {
    throw ValidationError("cutout size " + std::to_string(size) + " exceeds the image side");
  }
  if (size == 0) return image;
  const int cy = static_cast<int>(rng.below(image.height));
  const int cx = static_cast<int>(rng.below(image.width));
  const int y0 = std::max(0, cy - size / 2), y1 = std::min(image.height, cy - size / 2 + size);
  const int x0 = std::max(0, cx - size / 2), x1 = std::min(image.width, cx - size / 2 + size);
  Image out = image;
  for (int c = 0; c < image.channels; ++c) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) out.at(c, y, x) = 0.0f;
    }
  }
  return out;
}

MixupBatch mixup_with_lambda(const Tensor& images, const Tensor& labels, double lambda,
                             std::vector<std::size_t> partner) {
  const int n = images.shape().n;
  if (labels.shape().n != n) throw ShapeError("mixup: images and labels disagree on batch size");
  if (partner.size() != static_cast<std::size_t>(n)) throw ShapeError("mixup: partner list has the wrong length");
  MixupBatch out{Tensor(images.shape()), Tensor(labels.shape()), lambda, std::move(partner)};
  auto blend = [&](const Tensor& src, Tensor& dst) {
    const std::size_t row = src.numel() / n;
    const auto in = src.data();
    auto o = dst.mutable_data();
    const Real l = static_cast<Real>(lambda), k = static_cast<Real>(1.0 - lambda);
    for (int i = 0; i < n; ++i) {
      const Real* xi = in.data() + i * row;
      const Real* xj = in.data() + out.partner[i] * row;
      Real* d = o.data() + i * row;
      for (std::size_t e = 0; e < row; ++e) d[e] = l * xj[e] + k * xi[e];
    }
  };
  blend(images, out.images);
  blend(labels, out.labels);
  return out;
}

MixupBatch mixup(const Tensor& images, const Tensor& labels, double alpha, Philox& rng) {
  if (!(alpha >= 0.0)) throw ValidationError("mixup alpha must be >= 0");
  const int n = images.shape().n;
  std::vector<std::size_t> partner(n);
  for (int i = 0; i < n; ++i) partner[i] = i;
  for (std::size_t i = partner.size(); i > 1; --i) std::swap(partner[i - 1], partner[rng.below(i)]);
  const double lambda = alpha > 0.0 ? rng.beta(alpha, alpha) : 0.0;
  return mixup_with_lambda(images, labels, lambda, std::move(partner));
}

Tensor one_hot(const std::vector<int>& labels, int num_classes) {
  Tensor t(Shape{static_cast<int>(labels.size()), num_classes, 1, 1});
  auto d = t.mutable_data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw ValidationError("label out of range");
    d[i * num_classes + labels[i]] = Real(1);
  }
  return t;
}

Tensor stack(const std::vector<Image>& images) {
  if (images.empty()) throw ShapeError("cannot stack an empty batch");
  const Image& f = images.front();
  Tensor t(Shape{static_cast<int>(images.size()), f.channels, f.height, f.width});
  auto d = t.mutable_data();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].channels != f.channels || images[i].height != f.height || images[i].width != f.width) {
      throw ShapeError("stack: images differ in shape");
    }
    std::copy(images[i].pixels.begin(), images[i].pixels.end(), d.begin() + i * f.pixels.size());
  }
  return t;
}

}  // namespace effv2::data
