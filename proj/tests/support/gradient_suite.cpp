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

#include "support/gradient_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "effv2/tensor/ops.hpp"

static_assert(sizeof(effv2::Real) == 8, "gradient suite must build against the 64-bit engine");

namespace effv2::testing {
namespace {

using Forward = std::function<Tensor(const std::vector<Tensor>&)>;

Tensor random_tensor(Shape s, Philox& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Real> v(s.numel());
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(s, std::move(v));
}

Tensor evaluate(const Forward& f, const std::vector<Tensor>& inputs) {
  NoGradScope no_grad;
  return f(inputs);
}

// Directional derivative of sum(f(inputs) * projection) along one input element, from the
// fourth-order central stencil. Outputs are differenced before projecting so elements the
// perturbation does not touch cancel exactly instead of swamping a small derivative.
double numeric_derivative(const Forward& f, std::vector<Tensor>& inputs, Real* slot, const Tensor& projection,
                          double step) {
  const Real saved = *slot;
  auto at = [&](double offset) {
    *slot = saved + offset;
    return evaluate(f, inputs);
  };
  const Tensor p2 = at(2 * step), p1 = at(step), m1 = at(-step), m2 = at(-2 * step);
  *slot = saved;
  double acc = 0.0;
  for (std::size_t j = 0; j < projection.numel(); ++j) {
    const double d = 8.0 * (p1.data()[j] - m1.data()[j]) - (p2.data()[j] - m2.data()[j]);
    acc += d * projection.data()[j];
  }
  return acc / (12.0 * step);
}

double check(const Forward& f, std::vector<Tensor> inputs, Philox& rng, double step) {
  const Tensor projection = random_tensor(evaluate(f, inputs).shape(), rng);
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.clear_grad();
  }
  Tape tape;
  {
    TapeScope scope(tape);
    const Tensor loss = sum(mul(f(inputs), projection));
    backward(loss, tape);
  }
  double worst = 0.0;
  for (auto& t : inputs) {
    const std::vector<Real> analytic(t.grad().begin(), t.grad().end());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double numeric = numeric_derivative(f, inputs, &data[i], projection, step);
      const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
    }
  }
  return worst;
}

int pick(Philox& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(hi - lo + 1)); }

struct Case {
  std::string name;
  std::function<std::pair<Forward, std::vector<Tensor>>(Philox&)> make;
};

std::vector<Case> cases() {
  std::vector<Case> list;
  list.push_back({"conv2d", [](Philox& rng) {
    const int k = std::array{1, 3, 5}[rng.below(3)];
    const int stride = pick(rng, 1, 2);
    const int cin = pick(rng, 1, 3), cout = pick(rng, 1, 3);
    Shape xs{pick(rng, 1, 2), cin, pick(rng, 2, 6), pick(rng, 2, 6)};
    return std::pair{Forward([stride](const auto& in) { return conv2d(in[0], in[1], stride, Padding::kSame); }),
                     std::vector{random_tensor(xs, rng), random_tensor({cout, cin, k, k}, rng)}};
  }});
  list.push_back({"depthwise_conv2d", [](Philox& rng) {
    const int k = std::array{3, 5}[rng.below(2)];
    const int stride = pick(rng, 1, 2);
    const int c = pick(rng, 1, 4);
    Shape xs{pick(rng, 1, 2), c, pick(rng, 2, 6), pick(rng, 2, 6)};
    return std::pair{Forward([stride](const auto& in) { return depthwise_conv2d(in[0], in[1], stride, Padding::kSame); }),
                     std::vector{random_tensor(xs, rng), random_tensor({c, 1, k, k}, rng)}};
  }});
  list.push_back({"batch_norm_train", [](Philox& rng) {
    const int c = pick(rng, 1, 3);
    Shape xs{pick(rng, 2, 3), c, pick(rng, 1, 4), pick(rng, 1, 4)};
    return std::pair{Forward([c](const auto& in) {
                       auto stats = BatchNormStats::fresh(c);
                       return batch_norm(in[0], in[1], in[2], stats, Mode::kTrain, 0.99);
                     }),
                     std::vector{random_tensor(xs, rng), random_tensor({1, c, 1, 1}, rng, 0.5, 1.5),
                                 random_tensor({1, c, 1, 1}, rng)}};
  }});
  list.push_back({"batch_norm_eval", [](Philox& rng) {
    const int c = pick(rng, 1, 3);
    Shape xs{pick(rng, 1, 3), c, pick(rng, 1, 4), pick(rng, 1, 4)};
    auto stats = std::make_shared<BatchNormStats>(BatchNormStats::fresh(c));
    for (auto& v : stats->running_mean.mutable_data()) v = rng.uniform(-1, 1);
    for (auto& v : stats->running_var.mutable_data()) v = rng.uniform(0.5, 2);
    return std::pair{Forward([stats](const auto& in) {
                       return batch_norm(in[0], in[1], in[2], *stats, Mode::kEval, 0.99);
                     }),
                     std::vector{random_tensor(xs, rng), random_tensor({1, c, 1, 1}, rng),
                                 random_tensor({1, c, 1, 1}, rng)}};
  }});
  list.push_back({"silu", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    return std::pair{Forward([](const auto& in) { return silu(in[0]); }),
                     std::vector{random_tensor(xs, rng, -4, 4)}};
  }});
  list.push_back({"sigmoid", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    return std::pair{Forward([](const auto& in) { return sigmoid(in[0]); }),
                     std::vector{random_tensor(xs, rng, -4, 4)}};
  }});
  list.push_back({"global_avg_pool", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 5), pick(rng, 1, 5)};
    return std::pair{Forward([](const auto& in) { return global_avg_pool(in[0]); }),
                     std::vector{random_tensor(xs, rng)}};
  }});
  list.push_back({"fully_connected", [](Philox& rng) {
    const int n = pick(rng, 1, 3), in_c = pick(rng, 1, 6), out_c = pick(rng, 1, 4);
    return std::pair{Forward([](const auto& in) { return fully_connected(in[0], in[1], in[2]); }),
                     std::vector{random_tensor({n, in_c, 1, 1}, rng), random_tensor({out_c, in_c, 1, 1}, rng),
                                 random_tensor({1, out_c, 1, 1}, rng)}};
  }});
  list.push_back({"add", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    return std::pair{Forward([](const auto& in) { return add(in[0], in[1]); }),
                     std::vector{random_tensor(xs, rng), random_tensor(xs, rng)}};
  }});
  list.push_back({"mul", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    return std::pair{Forward([](const auto& in) { return mul(in[0], in[1]); }),
                     std::vector{random_tensor(xs, rng), random_tensor(xs, rng)}};
  }});
  list.push_back({"scale_channels", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    return std::pair{Forward([](const auto& in) { return scale_channels(in[0], in[1]); }),
                     std::vector{random_tensor(xs, rng), random_tensor({xs.n, xs.c, 1, 1}, rng)}};
  }});
  list.push_back({"sum", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    return std::pair{Forward([](const auto& in) { return sum(in[0]); }), std::vector{random_tensor(xs, rng)}};
  }});
  list.push_back({"dropout", [](Philox& rng) {
    Shape xs{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
    const double rate = rng.uniform(0.1, 0.6);
    const std::uint64_t seed = rng.next_u64();
    return std::pair{Forward([rate, seed](const auto& in) {
                       Philox mask_rng(seed);  // same mask on every evaluation
                       return dropout(in[0], rate, Mode::kTrain, mask_rng);
                     }),
                     std::vector{random_tensor(xs, rng)}};
  }});
  list.push_back({"stochastic_depth", [](Philox& rng) {
    Shape xs{pick(rng, 2, 4), pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 3)};
    const std::uint64_t seed = rng.next_u64();
    return std::pair{Forward([seed](const auto& in) {
                       Philox drop_rng(seed);
                       return stochastic_depth(in[0], in[1], 0.8, Mode::kTrain, drop_rng);
                     }),
                     std::vector{random_tensor(xs, rng), random_tensor(xs, rng)}};
  }});
  list.push_back({"softmax_cross_entropy", [](Philox& rng) {
    const int n = pick(rng, 1, 4), k = pick(rng, 2, 6);
    Tensor targets({n, k, 1, 1});
    for (int i = 0; i < n; ++i) {
      double total = 0;
      for (int j = 0; j < k; ++j) total += targets.mutable_data()[i * k + j] = rng.uniform();
      for (int j = 0; j < k; ++j) targets.mutable_data()[i * k + j] /= total;
    }
    return std::pair{Forward([targets](const auto& in) { return softmax_cross_entropy(in[0], targets); }),
                     std::vector{random_tensor({n, k, 1, 1}, rng, -2, 2)}};
  }});
  return list;
}

}  // namespace

std::vector<OpGradReport> run_gradient_suite(std::uint64_t seed, int shapes_per_op, double step) {
  std::vector<OpGradReport> reports;
  Philox rng(seed);
  for (const auto& c : cases()) {
    OpGradReport report{c.name, 0, 0.0};
    for (int s = 0; s < shapes_per_op; ++s) {
      auto [forward, inputs] = c.make(rng);
      report.max_rel_error = std::max(report.max_rel_error, check(forward, std::move(inputs), rng, step));
      ++report.shapes;
    }
    reports.push_back(report);
  }
  return reports;
}

}  // namespace effv2::testing
