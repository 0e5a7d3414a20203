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
#include <filesystem>
#include <string>
#include <vector>

#include "effv2/common/rng.hpp"
#include "effv2/data/image.hpp"

namespace effv2::data {

// Images are kept as bytes at native resolution and converted on access.
struct Dataset {
  std::string split = "train";
  int num_classes = 10;
  int channels = 3;
  int height = 32;
  int width = 32;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const { return std::size_t(channels) * height * width; }
  Image image(std::size_t index) const;
  void append(const std::uint8_t* chw, int label);
  Dataset subset(const std::vector<std::size_t>& indices, const std::string& split_name) const;
};

struct TrainSplit {
  Dataset train;
  Dataset minival;
};

// Seeded shuffle, then the last round(fraction * n) images become minival.
TrainSplit split_minival(const Dataset& source, double fraction, const Philox& rng);

struct Cifar10 {
  Dataset train;
  Dataset minival;
  Dataset eval;
};

inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;
inline constexpr std::size_t kCifarRecordsPerFile = 10000;
inline constexpr std::size_t kCifarFileBytes = kCifarRecordBytes * kCifarRecordsPerFile;

// Reads data_batch_{1..5}.bin and test_batch.bin. Throws IoError naming the file and
// the expected size on any missing or truncated file.
Cifar10 load_cifar10(const std::filesystem::path& dir, std::uint64_t split_seed = 0);

// Writes `train` (50,000 images) and `eval` (10,000 images) in the same byte layout.
void write_cifar10(const std::filesystem::path& dir, const Dataset& train, const Dataset& eval);

struct SyntheticOptions {
  double amplitude = 0.35;  // blob contrast against the gray background
  double noise_std = 0.08;  // per-pixel Gaussian noise
};

// Class-conditional Gaussian blobs: every class owns a blob center, width and colour.
Dataset synthetic_dataset(int num_classes, std::size_t n, int image_size, const Philox& rng,
                          const SyntheticOptions& options = {});

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

ChannelStats channel_stats(const Dataset& dataset);
void standardize(Image& image, const ChannelStats& stats);

}  // namespace effv2::data
