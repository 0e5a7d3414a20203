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
#include "effv2/tensor/tensor.hpp"

namespace effv2::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

struct CheckpointRecord {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> payload;  // little-endian element bytes

  static CheckpointRecord from_tensor(const std::string& name, const Tensor& t);
  static CheckpointRecord from_values(const std::string& name, const std::vector<double>& values);
  std::size_t numel() const;
  std::vector<double> values() const;
  // Copies into an existing tensor of the same shape.
  void copy_to(Tensor& t) const;
  bool operator==(const CheckpointRecord&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t step = 0;
  Philox::State rng;
  std::vector<CheckpointRecord> records;

  const CheckpointRecord& at(const std::string& name) const;
  bool contains(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source);

// Atomic: writes a sibling temp file and renames it over `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace effv2::train
