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

#include "effv2/data/image.hpp"

#include <algorithm>
#include <cmath>

#include "effv2/common/error.hpp"

namespace effv2::data {
namespace {

struct Tap {
  int lo;
  int hi;
  float frac;
};

std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> t(out);
  const double scale = double(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, double(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    t[i] = {lo, std::min(lo + 1, in - 1), static_cast<float>(src - lo)};
  }
  return t;
}

}  // namespace

Image resize(const Image& image, int target) {
  if (target < 8) throw ValidationError("resize target " + std::to_string(target) + " is below the minimum of 8");
  if (image.height == target && image.width == target) return image;
  const auto ty = taps(image.height, target);
  const auto tx = taps(image.width, target);
  Image out(image.channels, target, target);
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < target; ++y) {
      const Tap& a = ty[y];
      for (int x = 0; x < target; ++x) {
        const Tap& b = tx[x];
        const float top = image.at(c, a.lo, b.lo) + (image.at(c, a.lo, b.hi) - image.at(c, a.lo, b.lo)) * b.frac;
        const float bot = image.at(c, a.hi, b.lo) + (image.at(c, a.hi, b.hi) - image.at(c, a.hi, b.lo)) * b.frac;
        out.at(c, y, x) = top + (bot - top) * a.frac;
      }
    }
  }
  return out;
}

}  // namespace effv2::data
