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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "effv2/tensor/real.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {

// (batch, channels, height, width); unused trailing dims are 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Shared handle to a dense row-major NCHW buffer with an optional gradient
// slot. Copies alias the same storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> values);

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const Real> data() const { return impl_->data; }
  std::span<Real> mutable_data() { return impl_->data; }
  Real item() const;
  Real at(int n, int c, int h, int w) const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<const Real> grad() const { return impl_->grad; }
  // The gradient slot stays writable through const handles: values are
  // immutable once produced, gradients accumulate during backward.
  // Allocates a zero gradient on first use.
  std::span<Real> mutable_grad() const;
  void zero_grad() const;
  void clear_grad() const { impl_->grad.clear(); }

  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  bool all_finite() const;

 private:
  struct Impl {
    Shape shape;
    std::vector<Real> data;
    std::vector<Real> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
