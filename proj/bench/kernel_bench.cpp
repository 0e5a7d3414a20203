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

// Parallel kernels against the serial reference on training-sized shapes.

#include <benchmark/benchmark.h>

#include <vector>

#include "effv2/common/rng.hpp"
#include "effv2/tensor/kernels.hpp"

namespace {

using namespace effv2;

enum Impl { kParallel = 0, kReference = 1 };

struct ConvCase {
  const char* name;
  int batch, cin, size, cout, k, stride, groups;
};

// Shapes from the desk model at 64x64 with batch 32.
const ConvCase kConvCases[] = {
    {"stem3x3", 32, 3, 64, 16, 3, 2, 1},
    {"fused3x3", 32, 16, 32, 64, 3, 2, 1},
    {"expand1x1", 32, 32, 8, 128, 1, 1, 1},
    {"depthwise3x3", 32, 128, 8, 128, 3, 2, 128},
};

std::vector<Real> random_vector(std::size_t n, std::uint64_t seed) {
  Philox rng(seed);
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(rng.normal());
  return v;
}

struct ConvData {
  ConvGeometry g;
  std::vector<Real> x, w, y, dy, dx, dw;
  explicit ConvData(const ConvCase& c) {
    const Shape in{c.batch, c.cin, c.size, c.size};
    const Shape wt{c.cout, c.cin / c.groups, c.k, c.k};
    g = ConvGeometry::make(in, wt, c.stride, Padding::kSame, c.groups);
    x = random_vector(static_cast<std::size_t>(c.batch) * c.cin * c.size * c.size, 1);
    w = random_vector(static_cast<std::size_t>(c.cout) * (c.cin / c.groups) * c.k * c.k, 2);
    const std::size_t out = static_cast<std::size_t>(c.batch) * c.cout * g.out_h * g.out_w;
    y.assign(out, 0);
    dy = random_vector(out, 3);
    dx.assign(x.size(), 0);
    dw.assign(w.size(), 0);
  }
};

void conv_forward(benchmark::State& state) {
  ConvData d(kConvCases[state.range(0)]);
  for (auto _ : state) {
    if (state.range(1) == kParallel) kernels::conv2d_forward(d.g, d.x, d.w, d.y);
    else reference::conv2d_forward(d.g, d.x, d.w, d.y);
    benchmark::DoNotOptimize(d.y.data());
  }
  state.SetLabel(std::string(kConvCases[state.range(0)].name) + (state.range(1) == kParallel ? "/parallel" : "/reference"));
}

void conv_backward_input(benchmark::State& state) {
  ConvData d(kConvCases[state.range(0)]);
  for (auto _ : state) {
    if (state.range(1) == kParallel) kernels::conv2d_backward_input(d.g, d.dy, d.w, d.dx);
    else reference::conv2d_backward_input(d.g, d.dy, d.w, d.dx);
    benchmark::DoNotOptimize(d.dx.data());
  }
  state.SetLabel(std::string(kConvCases[state.range(0)].name) + (state.range(1) == kParallel ? "/parallel" : "/reference"));
}

void conv_backward_weight(benchmark::State& state) {
  ConvData d(kConvCases[state.range(0)]);
  for (auto _ : state) {
    if (state.range(1) == kParallel) kernels::conv2d_backward_weight(d.g, d.x, d.dy, d.dw);
    else reference::conv2d_backward_weight(d.g, d.x, d.dy, d.dw);
    benchmark::DoNotOptimize(d.dw.data());
  }
  state.SetLabel(std::string(kConvCases[state.range(0)].name) + (state.range(1) == kParallel ? "/parallel" : "/reference"));
}

void batch_norm(benchmark::State& state) {
  const BatchNormDims d{32, 64, 32 * 32};
  const std::size_t n = static_cast<std::size_t>(d.batch) * d.channels * d.plane;
  const auto x = random_vector(n, 4);
  const auto dy = random_vector(n, 5);
  const std::vector<Real> gamma(d.channels, 1), beta(d.channels, 0);
  std::vector<Real> y(n), dx(n), dgamma(d.channels), dbeta(d.channels);
  std::vector<double> mean(d.channels), invstd(d.channels);
  for (auto _ : state) {
    if (state.range(0) == kParallel) {
      kernels::batch_norm_forward_train(d, x, gamma, beta, 1e-3, y, mean, invstd);
      kernels::batch_norm_backward(d, x, dy, gamma, mean, invstd, true, dx, dgamma, dbeta);
    } else {
      reference::batch_norm_forward_train(d, x, gamma, beta, 1e-3, y, mean, invstd);
      reference::batch_norm_backward(d, x, dy, gamma, mean, invstd, true, dx, dgamma, dbeta);
    }
    benchmark::DoNotOptimize(dx.data());
  }
  state.SetLabel(state.range(0) == kParallel ? "parallel" : "reference");
}

void conv_args(benchmark::internal::Benchmark* b) {
  for (int c = 0; c < static_cast<int>(std::size(kConvCases)); ++c) {
    for (int impl : {kParallel, kReference}) b->Args({c, impl});
  }
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(conv_forward)->Apply(conv_args);
BENCHMARK(conv_backward_input)->Apply(conv_args);
BENCHMARK(conv_backward_weight)->Apply(conv_args);
BENCHMARK(batch_norm)->Arg(kParallel)->Arg(kReference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
