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

#include <functional>
#include <string>
#include <vector>

#include "effv2/tensor/tensor.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {

// Ordered record of differentiable ops executed while the tape is active on
// the calling thread. backward() replays the record once, newest first.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::string op, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward closure in
  // reverse order. The record is consumed.
  void backward(const Tensor& loss);

  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> op_names() const;

  // Tape recording on this thread, or nullptr.
  static Tape* active();

 private:
  friend class TapeScope;
  struct Entry {
    std::string op;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
};

// Makes a tape active on the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Suspends recording (e.g. for evaluation inside a training step).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
