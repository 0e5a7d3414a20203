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

#include "effv2/tensor/tape.hpp"

#include "effv2/common/error.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {
namespace {

thread_local Tape* g_active_tape = nullptr;

}  // namespace

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::string op, BackwardFn fn) {
  entries_.push_back(Entry{std::move(op), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? loss.shape().str() : std::string("<undefined>")));
  }
  Tensor seed = loss;
  seed.mutable_grad()[0] += Real(1);
  // Closures may not record, but guard against it anyway.
  NoGradScope no_grad;
  std::vector<Entry> entries = std::move(entries_);
  entries_.clear();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) it->fn();
}

std::vector<std::string> Tape::op_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& e : entries_) names.push_back(e.op);
  return names;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
