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

// Scalar type of the tensor engine. Building with EFFV2_REAL64 switches all
// tensor math to double; the inline namespace keeps both builds linkable into
// one binary.
#if defined(EFFV2_REAL64)
#define EFFV2_PRECISION_NS f64
#else
#define EFFV2_PRECISION_NS f32
#endif

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {

#if defined(EFFV2_REAL64)
using Real = double;
#else
using Real = float;
#endif

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
