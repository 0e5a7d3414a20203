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

#include "effv2/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "effv2/common/error.hpp"

namespace effv2::train {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'E', 'F', 'V', '2'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, const std::string& source) : in_(in), source_(source) {}
  template <typename T>
  T get(const char* what) {
    T v;
    need(sizeof(T), what);
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void bytes(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw IoError(source_ + ": truncated checkpoint while reading " + what + " at byte " + std::to_string(pos_));
    }
  }
  const std::vector<std::uint8_t>& in_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

std::size_t element_size(DType d) { return d == DType::kF32 ? 4 : 8; }

}  // namespace

CheckpointRecord CheckpointRecord::from_tensor(const std::string& name, const Tensor& t) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = sizeof(Real) == 4 ? DType::kF32 : DType::kF64;
  const Shape& s = t.shape();
  r.dims = {std::uint64_t(s.n), std::uint64_t(s.c), std::uint64_t(s.h), std::uint64_t(s.w)};
  r.payload.resize(t.numel() * sizeof(Real));
  std::memcpy(r.payload.data(), t.data().data(), r.payload.size());
  return r;
}

CheckpointRecord CheckpointRecord::from_values(const std::string& name, const std::vector<double>& values) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = DType::kF64;
  r.dims = {values.size()};
  r.payload.resize(values.size() * sizeof(double));
  std::memcpy(r.payload.data(), values.data(), r.payload.size());
  return r;
}

std::size_t CheckpointRecord::numel() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<double> CheckpointRecord::values() const {
  std::vector<double> out(numel());
  if (dtype == DType::kF64) {
    std::memcpy(out.data(), payload.data(), payload.size());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      float f;
      std::memcpy(&f, payload.data() + 4 * i, 4);
      out[i] = f;
    }
  }
  return out;
}

void CheckpointRecord::copy_to(Tensor& t) const {
  if (numel() != t.numel()) {
    throw ShapeError("checkpoint record '" + name + "' holds " + std::to_string(numel()) +
                     " values, target tensor " + t.shape().str());
  }
  auto dst = t.mutable_data();
  if (element_size(dtype) == sizeof(Real)) {
    std::memcpy(dst.data(), payload.data(), payload.size());
  } else {
    const auto v = values();
    for (std::size_t i = 0; i < v.size(); ++i) dst[i] = static_cast<Real>(v[i]);
  }
}

const CheckpointRecord& Checkpoint::at(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return r;
  }
  throw IoError("checkpoint has no record named '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return true;
  }
  return false;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(ckpt.version);
  w.put<std::uint64_t>(ckpt.step);
  w.put<std::uint64_t>(ckpt.rng.seed);
  w.put<std::uint64_t>(ckpt.rng.stream);
  w.put<std::uint64_t>(ckpt.rng.block);
  w.put<std::uint32_t>(ckpt.rng.lane);
  for (const auto& r : ckpt.records) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.name.size()));
    w.bytes(r.name.data(), r.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(r.dtype));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) w.put<std::uint64_t>(d);
    w.bytes(r.payload.data(), r.payload.size());
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  Reader r(bytes, source);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError(source + ": not a checkpoint (bad magic)");
  Checkpoint c;
  c.version = r.get<std::uint32_t>("version");
  if (c.version != kCheckpointVersion) {
    throw IoError(source + ": checkpoint version " + std::to_string(c.version) + ", expected " +
                  std::to_string(kCheckpointVersion));
  }
  c.step = r.get<std::uint64_t>("step");
  c.rng.seed = r.get<std::uint64_t>("rng seed");
  c.rng.stream = r.get<std::uint64_t>("rng stream");
  c.rng.block = r.get<std::uint64_t>("rng block");
  c.rng.lane = r.get<std::uint32_t>("rng lane");
  if (c.rng.lane > 4) throw IoError(source + ": corrupt rng state");
  while (!r.done()) {
    CheckpointRecord rec;
    const auto len = r.get<std::uint32_t>("record name length");
    if (len > 4096) throw IoError(source + ": corrupt record name length " + std::to_string(len));
    rec.name.resize(len);
    r.bytes(rec.name.data(), len, "record name");
    const auto tag = r.get<std::uint8_t>("dtype");
    if (tag > 1) throw IoError(source + ": record '" + rec.name + "' has unknown dtype " + std::to_string(tag));
    rec.dtype = static_cast<DType>(tag);
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank > 8) throw IoError(source + ": record '" + rec.name + "' has rank " + std::to_string(rank));
    for (std::uint32_t i = 0; i < rank; ++i) rec.dims.push_back(r.get<std::uint64_t>("dims"));
    const std::size_t n = rec.numel() * element_size(rec.dtype);
    if (n > bytes.size()) throw IoError(source + ": record '" + rec.name + "' is larger than the file");
    rec.payload.resize(n);
    r.bytes(rec.payload.data(), n, "payload");
    c.records.push_back(std::move(rec));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open checkpoint");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

}  // namespace effv2::train
