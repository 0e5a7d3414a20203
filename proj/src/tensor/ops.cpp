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

#include "effv2/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <memory>
#include <vector>

#include "effv2/common/error.hpp"

namespace effv2 {
inline namespace EFFV2_PRECISION_NS {
namespace {

// Parallelize elementwise loops only when the work pays for the fork.
constexpr std::size_t kParallelThreshold = 1 << 15;

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = Tape::active();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return tape;
  }
  return nullptr;
}

void require_defined(const Tensor& t, const char* op, const char* what) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": " + what + " is undefined");
}

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite input");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

Real sigmoid_scalar(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

// Adds `values` into t's gradient.
void accumulate(const Tensor& t, std::span<const Real> values) {
  if (!t.requires_grad()) return;
  auto g = t.mutable_grad();
  for (std::size_t i = 0; i < values.size(); ++i) g[i] += values[i];
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, int stride, Padding padding,
              int groups) {
  require_defined(input, "conv2d", "input");
  require_defined(weight, "conv2d", "weight");
  const ConvGeometry g = ConvGeometry::make(input.shape(), weight.shape(), stride, padding, groups);
  require_finite(input, "conv2d");
  require_finite(weight, "conv2d");
  Tensor out(Shape{g.batch, g.out_channels, g.out_h, g.out_w});
  kernels::conv2d_forward(g, input.data(), weight.data(), out.mutable_data());
  if (Tape* tape = recording_tape({&input, &weight})) {
    out.set_requires_grad(true);
    tape->record(groups == 1 ? "conv2d" : "grouped_conv2d", [g, input, weight, out]() mutable {
      if (!out.has_grad()) return;
      if (input.requires_grad()) {
        kernels::conv2d_backward_input(g, out.grad(), weight.data(), input.mutable_grad());
      }
      if (weight.requires_grad()) {
        kernels::conv2d_backward_weight(g, input.data(), out.grad(), weight.mutable_grad());
      }
    });
  }
  return out;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight, int stride, Padding padding) {
  require_defined(input, "depthwise_conv2d", "input");
  require_defined(weight, "depthwise_conv2d", "weight");
  if (weight.shape().c != 1 || weight.shape().n != input.shape().c) {
    throw ShapeError("depthwise_conv2d: weight must be [c, 1, kh, kw], got " +
                     weight.shape().str() + " for input " + input.shape().str());
  }
  return conv2d(input, weight, stride, padding, input.shape().c);
}

BatchNormStats BatchNormStats::fresh(int channels) {
  return BatchNormStats{Tensor(Shape{1, channels, 1, 1}, Real(0)),
                        Tensor(Shape{1, channels, 1, 1}, Real(1))};
}

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, Mode mode, double momentum, double eps) {
  require_defined(input, "batch_norm", "input");
  const Shape s = input.shape();
  const Shape per_channel{1, s.c, 1, 1};
  if (gamma.shape() != per_channel || beta.shape() != per_channel ||
      stats.running_mean.shape() != per_channel || stats.running_var.shape() != per_channel) {
    throw ShapeError("batch_norm: per-channel tensors must be " + per_channel.str());
  }
  const BatchNormDims d{s.n, s.c, static_cast<int>(s.plane())};
  auto mean = std::make_shared<std::vector<double>>(s.c);
  auto invstd = std::make_shared<std::vector<double>>(s.c);
  Tensor out(s);
  const bool batch_stats = mode == Mode::kTrain;
  if (batch_stats) {
    kernels::batch_norm_forward_train(d, input.data(), gamma.data(), beta.data(), eps,
                                      out.mutable_data(), *mean, *invstd);
    auto rm = stats.running_mean.mutable_data();
    auto rv = stats.running_var.mutable_data();
    for (int c = 0; c < s.c; ++c) {
      const double var = 1.0 / ((*invstd)[c] * (*invstd)[c]) - eps;
      rm[c] = static_cast<Real>(momentum * rm[c] + (1.0 - momentum) * (*mean)[c]);
      rv[c] = static_cast<Real>(momentum * rv[c] + (1.0 - momentum) * std::max(var, 0.0));
    }
  } else {
    auto rm = stats.running_mean.data();
    auto rv = stats.running_var.data();
    for (int c = 0; c < s.c; ++c) {
      (*mean)[c] = rm[c];
      (*invstd)[c] = 1.0 / std::sqrt(static_cast<double>(rv[c]) + eps);
    }
    kernels::batch_norm_forward_eval(d, input.data(), gamma.data(), beta.data(), *mean, *invstd,
                                     out.mutable_data());
  }
  if (Tape* tape = recording_tape({&input, &gamma, &beta})) {
    out.set_requires_grad(true);
    tape->record("batch_norm",
                 [d, input, gamma, beta, out, mean, invstd, batch_stats]() mutable {
                   if (!out.has_grad()) return;
                   std::span<Real> dx, dgamma, dbeta;
                   if (input.requires_grad()) dx = input.mutable_grad();
                   if (gamma.requires_grad()) dgamma = gamma.mutable_grad();
                   if (beta.requires_grad()) dbeta = beta.mutable_grad();
                   kernels::batch_norm_backward(d, input.data(), out.grad(), gamma.data(), *mean,
                                                *invstd, batch_stats, dx, dgamma, dbeta);
                 });
  }
  return out;
}

Tensor silu(const Tensor& input) {
  require_defined(input, "silu", "input");
  Tensor out(input.shape());
  const auto x = input.data();
  auto y = out.mutable_data();
  const std::size_t count = x.size();
  Tape* tape = recording_tape({&input});
  // The backward pass reuses the forward sigmoid.
  auto gate = std::make_shared<std::vector<Real>>(tape ? count : 0);
  Real* s = gate->data();
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (std::size_t i = 0; i < count; ++i) {
    const Real si = sigmoid_scalar(x[i]);
    if (s) s[i] = si;
    y[i] = x[i] * si;
  }
  if (tape) {
    out.set_requires_grad(true);
    tape->record("silu", [input, out, gate]() mutable {
      if (!out.has_grad()) return;
      const auto x = input.data();
      const auto dy = out.grad();
      auto dx = input.mutable_grad();
      const Real* s = gate->data();
      const std::size_t count = x.size();
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
      for (std::size_t i = 0; i < count; ++i) dx[i] += dy[i] * s[i] * (Real(1) + x[i] * (Real(1) - s[i]));
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& input) {
  require_defined(input, "sigmoid", "input");
  Tensor out(input.shape());
  const auto x = input.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid_scalar(x[i]);
  if (Tape* tape = recording_tape({&input})) {
    out.set_requires_grad(true);
    tape->record("sigmoid", [input, out]() mutable {
      if (!out.has_grad()) return;
      const auto y = out.data();
      const auto dy = out.grad();
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * y[i] * (Real(1) - y[i]);
    });
  }
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  require_defined(input, "global_avg_pool", "input");
  const Shape s = input.shape();
  const std::size_t plane = s.plane();
  Tensor out(Shape{s.n, s.c, 1, 1});
  const auto x = input.data();
  auto y = out.mutable_data();
  const int jobs = s.n * s.c;
#pragma omp parallel for schedule(static) if (x.size() > kParallelThreshold)
  for (int j = 0; j < jobs; ++j) {
    double acc = 0.0;
    const Real* p = x.data() + static_cast<std::size_t>(j) * plane;
    for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    y[j] = static_cast<Real>(acc / static_cast<double>(plane));
  }
  if (Tape* tape = recording_tape({&input})) {
    out.set_requires_grad(true);
    tape->record("global_avg_pool", [input, out, plane, jobs]() mutable {
      if (!out.has_grad()) return;
      const auto dy = out.grad();
      auto dx = input.mutable_grad();
      const Real inv = Real(1) / static_cast<Real>(plane);
      for (int j = 0; j < jobs; ++j) {
        Real* p = dx.data() + static_cast<std::size_t>(j) * plane;
        const Real g = dy[j] * inv;
        for (std::size_t i = 0; i < plane; ++i) p[i] += g;
      }
    });
  }
  return out;
}

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_defined(input, "fully_connected", "input");
  require_defined(weight, "fully_connected", "weight");
  const Shape xs = input.shape();
  const Shape ws = weight.shape();
  if (xs.h != 1 || xs.w != 1 || ws.h != 1 || ws.w != 1 || ws.c != xs.c) {
    throw ShapeError("fully_connected: input " + xs.str() + " incompatible with weight " +
                     ws.str());
  }
  const int n = xs.n;
  const int in = xs.c;
  const int outc = ws.n;
  if (bias.defined() && bias.shape() != Shape{1, outc, 1, 1}) {
    throw ShapeError("fully_connected: bias must be " + Shape{1, outc, 1, 1}.str());
  }
  require_finite(input, "fully_connected");
  Tensor out(Shape{n, outc, 1, 1});
  const auto x = input.data();
  const auto w = weight.data();
  auto y = out.mutable_data();
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < outc; ++o) {
      double acc = bias.defined() ? bias.data()[o] : 0.0;
      const Real* wr = w.data() + static_cast<std::size_t>(o) * in;
      const Real* xr = x.data() + static_cast<std::size_t>(i) * in;
      for (int k = 0; k < in; ++k) acc += static_cast<double>(xr[k]) * wr[k];
      y[static_cast<std::size_t>(i) * outc + o] = static_cast<Real>(acc);
    }
  }
  if (Tape* tape = recording_tape({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->record("fully_connected", [input, weight, bias, out, n, in, outc]() mutable {
      if (!out.has_grad()) return;
      const auto dy = out.grad();
      if (input.requires_grad()) {
        auto dx = input.mutable_grad();
        const auto w = weight.data();
        for (int i = 0; i < n; ++i)
          for (int o = 0; o < outc; ++o) {
            const Real g = dy[static_cast<std::size_t>(i) * outc + o];
            const Real* wr = w.data() + static_cast<std::size_t>(o) * in;
            Real* dxr = dx.data() + static_cast<std::size_t>(i) * in;
            for (int k = 0; k < in; ++k) dxr[k] += g * wr[k];
          }
      }
      if (weight.requires_grad()) {
        auto dw = weight.mutable_grad();
        const auto x = input.data();
        for (int o = 0; o < outc; ++o)
          for (int k = 0; k < in; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
              acc += static_cast<double>(dy[static_cast<std::size_t>(i) * outc + o]) *
                     x[static_cast<std::size_t>(i) * in + k];
            }
            dw[static_cast<std::size_t>(o) * in + k] += static_cast<Real>(acc);
          }
      }
      if (bias.defined() && bias.requires_grad()) {
        auto db = bias.mutable_grad();
        for (int o = 0; o < outc; ++o) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += dy[static_cast<std::size_t>(i) * outc + o];
          db[o] += static_cast<Real>(acc);
        }
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add", "lhs");
  require_defined(b, "add", "rhs");
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  const auto x = a.data();
  const auto y = b.data();
  auto z = out.mutable_data();
  const std::size_t count = x.size();
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (std::size_t i = 0; i < count; ++i) z[i] = x[i] + y[i];
  if (Tape* tape = recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record("add", [a, b, out]() mutable {
      if (!out.has_grad()) return;
      accumulate(a, out.grad());
      accumulate(b, out.grad());
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined(a, "mul", "lhs");
  require_defined(b, "mul", "rhs");
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  const auto x = a.data();
  const auto y = b.data();
  auto z = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] * y[i];
  if (Tape* tape = recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record("mul", [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto dy = out.grad();
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        const auto bv = b.data();
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        const auto av = a.data();
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale_channels(const Tensor& x, const Tensor& gate) {
  require_defined(x, "scale_channels", "input");
  require_defined(gate, "scale_channels", "gate");
  const Shape s = x.shape();
  if (gate.shape() != Shape{s.n, s.c, 1, 1}) {
    throw ShapeError("scale_channels: gate " + gate.shape().str() + " does not match input " +
                     s.str());
  }
  const std::size_t plane = s.plane();
  const int jobs = s.n * s.c;
  Tensor out(s);
  const auto xv = x.data();
  const auto gv = gate.data();
  auto y = out.mutable_data();
#pragma omp parallel for schedule(static) if (xv.size() > kParallelThreshold)
  for (int j = 0; j < jobs; ++j) {
    const std::size_t base = static_cast<std::size_t>(j) * plane;
    for (std::size_t i = 0; i < plane; ++i) y[base + i] = xv[base + i] * gv[j];
  }
  if (Tape* tape = recording_tape({&x, &gate})) {
    out.set_requires_grad(true);
    tape->record("scale_channels", [x, gate, out, plane, jobs]() mutable {
      if (!out.has_grad()) return;
      const auto dy = out.grad();
      if (x.requires_grad()) {
        auto dx = x.mutable_grad();
        const auto gv = gate.data();
        for (int j = 0; j < jobs; ++j) {
          const std::size_t base = static_cast<std::size_t>(j) * plane;
          for (std::size_t i = 0; i < plane; ++i) dx[base + i] += dy[base + i] * gv[j];
        }
      }
      if (gate.requires_grad()) {
        auto dg = gate.mutable_grad();
        const auto xv = x.data();
        for (int j = 0; j < jobs; ++j) {
          const std::size_t base = static_cast<std::size_t>(j) * plane;
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += static_cast<double>(dy[base + i]) * xv[base + i];
          dg[j] += static_cast<Real>(acc);
        }
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& input) {
  require_defined(input, "sum", "input");
  double acc = 0.0;
  for (Real v : input.data()) acc += v;
  Tensor out(Shape{}, static_cast<Real>(acc));
  if (Tape* tape = recording_tape({&input})) {
    out.set_requires_grad(true);
    tape->record("sum", [input, out]() mutable {
      if (!out.has_grad()) return;
      const Real g = out.grad()[0];
      for (Real& v : input.mutable_grad()) v += g;
    });
  }
  return out;
}

Tensor dropout(const Tensor& input, double rate, Mode mode, Philox& rng) {
  require_defined(input, "dropout", "input");
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ValidationError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::kEval || rate == 0.0) return input;
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<Real>>(input.numel());
  for (Real& m : *mask) m = rng.uniform() < rate ? Real(0) : keep_scale;
  Tensor out(input.shape());
  const auto x = input.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * (*mask)[i];
  if (Tape* tape = recording_tape({&input})) {
    out.set_requires_grad(true);
    tape->record("dropout", [input, out, mask]() mutable {
      if (!out.has_grad()) return;
      const auto dy = out.grad();
      auto dx = input.mutable_grad();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (*mask)[i];
    });
  }
  return out;
}

Tensor stochastic_depth(const Tensor& block_output, const Tensor& block_input,
                        double survival_prob, Mode mode, Philox& rng) {
  require_defined(block_output, "stochastic_depth", "block output");
  require_defined(block_input, "stochastic_depth", "block input");
  require_same_shape(block_output, block_input, "stochastic_depth");
  if (!(survival_prob > 0.0 && survival_prob <= 1.0)) {
    throw ValidationError("survival probability must be in (0, 1], got " +
                          std::to_string(survival_prob));
  }
  if (mode == Mode::kEval || survival_prob == 1.0) return add(block_input, block_output);
  const Shape s = block_output.shape();
  const std::size_t sample = static_cast<std::size_t>(s.c) * s.plane();
  auto scale = std::make_shared<std::vector<Real>>(s.n);
  for (Real& k : *scale) {
    k = rng.uniform() < survival_prob ? static_cast<Real>(1.0 / survival_prob) : Real(0);
  }
  Tensor out(s);
  const auto fx = block_output.data();
  const auto x = block_input.data();
  auto y = out.mutable_data();
  for (int n = 0; n < s.n; ++n) {
    const Real k = (*scale)[n];
    const std::size_t base = static_cast<std::size_t>(n) * sample;
    for (std::size_t i = 0; i < sample; ++i) y[base + i] = x[base + i] + k * fx[base + i];
  }
  if (Tape* tape = recording_tape({&block_output, &block_input})) {
    out.set_requires_grad(true);
    tape->record("stochastic_depth",
                 [block_output, block_input, out, scale, sample]() mutable {
                   if (!out.has_grad()) return;
                   const auto dy = out.grad();
                   accumulate(block_input, dy);
                   if (block_output.requires_grad()) {
                     auto df = block_output.mutable_grad();
                     for (std::size_t n = 0; n < scale->size(); ++n) {
                       const Real k = (*scale)[n];
                       if (k == Real(0)) continue;
                       for (std::size_t i = n * sample; i < (n + 1) * sample; ++i) df[i] += k * dy[i];
                     }
                   }
                 });
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& targets) {
  require_defined(logits, "softmax_cross_entropy", "logits");
  require_defined(targets, "softmax_cross_entropy", "targets");
  require_same_shape(logits, targets, "softmax_cross_entropy");
  const Shape s = logits.shape();
  if (s.h != 1 || s.w != 1) throw ShapeError("softmax_cross_entropy: logits must be [n, k, 1, 1]");
  require_finite(logits, "softmax_cross_entropy");
  const int n = s.n;
  const int k = s.c;
  auto probs = std::make_shared<std::vector<Real>>(logits.numel());
  const auto z = logits.data();
  const auto t = targets.data();
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const Real* row = z.data() + static_cast<std::size_t>(i) * k;
    const Real mx = *std::max_element(row, row + k);
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
    const double log_denom = std::log(denom);
    for (int j = 0; j < k; ++j) {
      const double logp = static_cast<double>(row[j] - mx) - log_denom;
      (*probs)[static_cast<std::size_t>(i) * k + j] = static_cast<Real>(std::exp(logp));
      loss -= t[static_cast<std::size_t>(i) * k + j] * logp;
    }
  }
  Tensor out(Shape{}, static_cast<Real>(loss / n));
  if (Tape* tape = recording_tape({&logits})) {
    out.set_requires_grad(true);
    tape->record("softmax_cross_entropy", [logits, targets, out, probs, n]() mutable {
      if (!out.has_grad()) return;
      const Real g = out.grad()[0] / static_cast<Real>(n);
      const auto t = targets.data();
      auto dz = logits.mutable_grad();
      for (std::size_t i = 0; i < dz.size(); ++i) dz[i] += g * ((*probs)[i] - t[i]);
    });
  }
  return out;
}

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace EFFV2_PRECISION_NS
}  // namespace effv2
