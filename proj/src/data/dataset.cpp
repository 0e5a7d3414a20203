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

#include "effv2/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "effv2/common/error.hpp"

namespace effv2::data {

namespace fs = std::filesystem;

Image Dataset::image(std::size_t index) const {
  if (index >= size()) throw ValidationError("image index " + std::to_string(index) + " out of range");
  Image img(channels, height, width);
  const std::uint8_t* src = pixels.data() + index * image_bytes();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = src[i] / 255.0f;
  return img;
}

void Dataset::append(const std::uint8_t* chw, int label) {
  if (label < 0 || label >= num_classes) {
    throw ValidationError("label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
  }
  pixels.insert(pixels.end(), chw, chw + image_bytes());
  labels.push_back(label);
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices, const std::string& split_name) const {
  Dataset out;
  out.split = split_name;
  out.num_classes = num_classes;
  out.channels = channels;
  out.height = height;
  out.width = width;
  out.pixels.reserve(indices.size() * image_bytes());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.append(pixels.data() + i * image_bytes(), labels.at(i));
  return out;
}

TrainSplit split_minival(const Dataset& source, double fraction, const Philox& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("minival fraction must be in [0, 1)");
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), 0);
  Philox shuffle = rng;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
  const auto held = static_cast<std::size_t>(std::llround(fraction * double(source.size())));
  const std::vector<std::size_t> train(order.begin(), order.end() - held);
  const std::vector<std::size_t> minival(order.end() - held, order.end());
  return {source.subset(train, "train"), source.subset(minival, "minival")};
}

namespace {

const char* const kTrainFiles[] = {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
                                   "data_batch_5.bin"};
const char* const kTestFile = "test_batch.bin";

std::vector<std::uint8_t> read_batch_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string() + ": cannot open (expected " + std::to_string(kCifarFileBytes) + " bytes)");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != kCifarFileBytes) {
    throw IoError(path.string() + ": expected " + std::to_string(kCifarFileBytes) + " bytes, found " +
                  std::to_string(bytes.size()));
  }
  return bytes;
}

void append_records(Dataset& ds, const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  for (std::size_t r = 0; r < kCifarRecordsPerFile; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] >= 10) {
      throw IoError(path.string() + ": record " + std::to_string(r) + " has label " + std::to_string(rec[0]));
    }
    ds.append(rec + 1, rec[0]);
  }
}

Dataset cifar_shell(const std::string& split) {
  Dataset d;
  d.split = split;
  return d;
}

void write_batch(const fs::path& path, const Dataset& ds, std::size_t first) {
  std::vector<std::uint8_t> bytes(kCifarFileBytes);
  for (std::size_t r = 0; r < kCifarRecordsPerFile; ++r) {
    std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
    rec[0] = static_cast<std::uint8_t>(ds.labels[first + r]);
    std::copy_n(ds.pixels.data() + (first + r) * ds.image_bytes(), ds.image_bytes(), rec + 1);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

}  // namespace

Cifar10 load_cifar10(const fs::path& dir, std::uint64_t split_seed) {
  // Read every file before building anything so a bad file never yields a partial dataset.
  std::vector<std::vector<std::uint8_t>> train_bytes;
  for (const char* name : kTrainFiles) train_bytes.push_back(read_batch_file(dir / name));
  const auto test_bytes = read_batch_file(dir / kTestFile);

  Dataset full = cifar_shell("train");
  full.pixels.reserve(5 * kCifarRecordsPerFile * full.image_bytes());
  for (std::size_t f = 0; f < train_bytes.size(); ++f) {
    append_records(full, train_bytes[f], dir / kTrainFiles[f]);
    train_bytes[f] = {};
  }
  Cifar10 out;
  auto split = split_minival(full, 0.02, Philox(split_seed, 0x6d696e69));
  out.train = std::move(split.train);
  out.minival = std::move(split.minival);
  out.eval = cifar_shell("eval");
  append_records(out.eval, test_bytes, dir / kTestFile);
  return out;
}

void write_cifar10(const fs::path& dir, const Dataset& train, const Dataset& eval) {
  auto check = [](const Dataset& d, std::size_t n, const char* what) {
    if (d.size() != n || d.channels != 3 || d.height != 32 || d.width != 32 || d.num_classes > 10) {
      throw ValidationError(std::string(what) + " must hold " + std::to_string(n) + " 3x32x32 images with <= 10 classes");
    }
  };
  check(train, 5 * kCifarRecordsPerFile, "train");
  check(eval, kCifarRecordsPerFile, "eval");
  fs::create_directories(dir);
  for (std::size_t f = 0; f < 5; ++f) write_batch(dir / kTrainFiles[f], train, f * kCifarRecordsPerFile);
  write_batch(dir / kTestFile, eval, 0);
}

Dataset synthetic_dataset(int num_classes, std::size_t n, int image_size, const Philox& rng,
                          const SyntheticOptions& options) {
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
  if (image_size < 8) throw ValidationError("image_size must be >= 8");
  struct Blob {
    double cx, cy, sigma;
    double colour[3];
  };
  std::vector<Blob> blobs(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    Philox r = rng.derive(0x10000u + k);
    Blob& b = blobs[k];
    b.cx = r.uniform(0.25, 0.75) * image_size;
    b.cy = r.uniform(0.25, 0.75) * image_size;
    b.sigma = r.uniform(0.12, 0.25) * image_size;
    for (double& c : b.colour) c = r.uniform(-1.0, 1.0);
  }
  Dataset ds;
  ds.split = "train";
  ds.num_classes = num_classes;
  ds.height = ds.width = image_size;
  ds.pixels.reserve(n * ds.image_bytes());
  std::vector<std::uint8_t> buf(ds.image_bytes());
  for (std::size_t i = 0; i < n; ++i) {
    Philox r = rng.derive(i);
    const int label = static_cast<int>(r.below(num_classes));
    const Blob& b = blobs[label];
    // Small per-sample jitter of the blob centre keeps the task from being a lookup.
    const double jx = r.normal() * 0.05 * image_size, jy = r.normal() * 0.05 * image_size;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < image_size; ++y) {
        for (int x = 0; x < image_size; ++x) {
          const double dx = x + 0.5 - b.cx - jx, dy = y + 0.5 - b.cy - jy;
          const double g = std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
          const double v = 0.5 + options.amplitude * g * b.colour[c] + options.noise_std * r.normal();
          buf[(std::size_t(c) * image_size + y) * image_size + x] =
              static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
      }
    }
    ds.append(buf.data(), label);
  }
  return ds;
}

ChannelStats channel_stats(const Dataset& dataset) {
  ChannelStats s{std::vector<double>(dataset.channels, 0.0), std::vector<double>(dataset.channels, 1.0)};
  if (dataset.size() == 0) return s;
  const std::size_t plane = std::size_t(dataset.height) * dataset.width;
  for (int c = 0; c < dataset.channels; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const std::uint8_t* p = dataset.pixels.data() + i * dataset.image_bytes() + c * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        const double v = p[k] / 255.0;
        sum += v;
        sq += v * v;
      }
    }
    const double count = double(plane) * dataset.size();
    s.mean[c] = sum / count;
    s.stddev[c] = std::sqrt(std::max(sq / count - s.mean[c] * s.mean[c], 1e-12));
  }
  return s;
}

void standardize(Image& image, const ChannelStats& stats) {
  const std::size_t plane = std::size_t(image.height) * image.width;
  for (int c = 0; c < image.channels; ++c) {
    const float m = static_cast<float>(stats.mean.at(c));
    const float inv = static_cast<float>(1.0 / stats.stddev.at(c));
    float* p = image.pixels.data() + c * plane;
    for (std::size_t k = 0; k < plane; ++k) p[k] = (p[k] - m) * inv;
  }
}

}  // namespace effv2::data
