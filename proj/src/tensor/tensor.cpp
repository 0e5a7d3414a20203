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

#include "effv2/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "effv2/common/error.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {

std::string Shape::str() const {
  return "[" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + "]";
}

Tensor::Tensor(Shape shape, Real fill) : impl_(std::make_shared<Impl>()) {
  if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0) {
    throw ShapeError("tensor dims must be positive, got " + shape.str());
  }
  impl_->shape = shape;
  impl_->data.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> values) : impl_(std::make_shared<Impl>()) {
  if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0) {
    throw ShapeError("tensor dims must be positive, got " + shape.str());
  }
  if (values.size() != shape.numel()) {
    throw ShapeError("tensor of shape " + shape.str() + " needs " + std::to_string(shape.numel()) +
                     " values, got " + std::to_string(values.size()));
  }
  impl_->shape = shape;
  impl_->data = std::move(values);
}

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
  return impl_->data[0];
}

Real Tensor::at(int n, int c, int h, int w) const {
  const Shape& s = impl_->shape;
  return impl_->data[((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

std::span<Real> Tensor::mutable_grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), Real(0));
  return impl_->grad;
}

void Tensor::zero_grad() const {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), Real(0));
}

Tensor Tensor::clone() const {
  Tensor copy(impl_->shape, impl_->data);
  copy.impl_->requires_grad = impl_->requires_grad;
  return copy;
}

bool Tensor::all_finite() const {
  return std::all_of(impl_->data.begin(), impl_->data.end(),
                     [](Real v) { return std::isfinite(v); });
}

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
