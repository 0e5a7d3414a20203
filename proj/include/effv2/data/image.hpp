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

#include <cstddef>
#include <vector>

namespace effv2::data {

// One CHW image with real pixels in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f) : channels(c), height(h), width(w), pixels(std::size_t(c) * h * w, fill) {}

  float& at(int c, int y, int x) { return pixels[(std::size_t(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return pixels[(std::size_t(c) * height + y) * width + x]; }
  bool operator==(const Image&) const = default;
};

// Bilinear resize to target x target with half-pixel centers. Throws ValidationError if target < 8.
Image resize(const Image& image, int target);

}  // namespace effv2::data
