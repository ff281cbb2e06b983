/*
 * Copyright 2026 The munmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gradcheck.hpp"
#include "tensor/ops.hpp"
#include "tensor/optim.hpp"

using namespace munmt;
using namespace munmt::tensor;
using munmt::testing::check_gradients;
using munmt::testing::random_tensor;

namespace {

// Weighted sum so that every output element carries a distinct gradient.
Var weighted_sum(Graph<double>& g, Var y, Rng& rng) {
  const auto& shape = g.value(y).shape();
  Var w = g.constant(random_tensor(rng, shape));
  return sum(g, mul(g, y, w));
}

// Inputs bounded away from zero so relu kinks are not straddled by +-h.
Tensor<double> away_from_zero(Rng& rng, Shape shape) {
  auto t = random_tensor(rng, std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i]) < 1e-2) t[i] = t[i] < 0 ? -0.5 : 0.5;
  }
  return t;
}

constexpr int kTrials = 100;
constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("backward of x*x at 3 is 6") {
  ParamStore<double> p;
  p.add("x", Tensor<double>::scalar(3.0));
  Graph<double> g;
  Var x = g.parameter(0, p.value(0));
  auto grads = g.backward(mul(g, x, x), p);
  CHECK(grads[0].item() == doctest::Approx(6.0));
}

TEST_CASE("gradient of sum(softmax(x)) vanishes") {
  Rng rng(3);
  ParamStore<double> p;
  p.add("x", random_tensor(rng, {3, 7}, 2.0));
  Graph<double> g;
  Var x = g.parameter(0, p.value(0));
  auto grads = g.backward(sum(g, softmax(g, x)), p);
  for (double v : grads[0].values()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("three-layer matmul/relu/layernorm composition matches finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    ParamStore<double> p;
    p.add("x", random_tensor(rng, {4, 5}));
    p.add("w1", random_tensor(rng, {5, 6}, 0.5));
    p.add("w2", random_tensor(rng, {6, 6}, 0.5));
    p.add("g", random_tensor(rng, {6}));
    p.add("b", random_tensor(rng, {6}));
    p.add("w3", random_tensor(rng, {6, 3}, 0.5));
    auto weights = random_tensor(rng, {4, 3});
    auto res = check_gradients(p, [&](Graph<double>& g, const std::vector<Var>& v) {
      Var h = relu(g, matmul(g, v[0], v[1]));
      h = layer_norm(g, matmul(g, h, v[2]), v[3], v[4]);
      Var out = matmul(g, h, v[5]);
      return sum(g, mul(g, out, g.constant(weights)));
    });
    CHECK(res.max_rel_error <= kTol);
  }
}

TEST_CASE("every primitive matches central finite differences over 100 trials") {
  Rng rng(2024);
  double worst = 0.0;
  auto run = [&](const char* name, auto&& make_params, auto&& body) {
    double op_worst = 0.0;
    for (int t = 0; t < kTrials; ++t) {
      ParamStore<double> p = make_params();
      const std::uint64_t wseed = rng.next();
      auto res = check_gradients(p, [&](Graph<double>& g, const std::vector<Var>& v) {
        Rng wr(wseed);
        return weighted_sum(g, body(g, v), wr);
      });
      op_worst = std::max(op_worst, res.max_rel_error);
    }
    INFO(name << " worst relative error " << op_worst);
    CHECK(op_worst <= kTol);
    worst = std::max(worst, op_worst);
  };
  auto two = [&](Shape a, Shape b) {
    return [&rng, a, b] {
      ParamStore<double> p;
      p.add("a", random_tensor(rng, a));
      p.add("b", random_tensor(rng, b));
      return p;
    };
  };
  run("add", two({3, 4}, {3, 4}),
      [](Graph<double>& g, const std::vector<Var>& v) { return add(g, v[0], v[1]); });
  run("sub", two({3, 4}, {3, 4}),
      [](Graph<double>& g, const std::vector<Var>& v) { return sub(g, v[0], v[1]); });
  run("mul", two({3, 4}, {3, 4}),
      [](Graph<double>& g, const std::vector<Var>& v) { return mul(g, v[0], v[1]); });
  run("scale", two({3, 4}, {1}),
      [](Graph<double>& g, const std::vector<Var>& v) { return scale(g, v[0], 0.37); });
  run("add_bias", two({5, 4}, {4}),
      [](Graph<double>& g, const std::vector<Var>& v) { return add_bias(g, v[0], v[1]); });
  run("matmul", two({3, 4}, {4, 5}),
      [](Graph<double>& g, const std::vector<Var>& v) { return matmul(g, v[0], v[1]); });
  run("matmul_nt", two({3, 4}, {5, 4}),
      [](Graph<double>& g, const std::vector<Var>& v) { return matmul_nt(g, v[0], v[1]); });
  run("relu",
      [&] {
        ParamStore<double> p;
        p.add("x", away_from_zero(rng, {4, 5}));
        return p;
      },
      [](Graph<double>& g, const std::vector<Var>& v) { return relu(g, v[0]); });
  run("layer_norm",
      [&] {
        ParamStore<double> p;
        p.add("x", random_tensor(rng, {4, 6}));
        p.add("g", random_tensor(rng, {6}));
        p.add("b", random_tensor(rng, {6}));
        return p;
      },
      [](Graph<double>& g, const std::vector<Var>& v) {
        return layer_norm(g, v[0], v[1], v[2]);
      });
  run("softmax", two({4, 6}, {1}),
      [](Graph<double>& g, const std::vector<Var>& v) { return softmax(g, v[0]); });
  run("sum", two({3, 3}, {1}),
      [](Graph<double>& g, const std::vector<Var>& v) { return sum(g, v[0]); });
  run("embedding", two({6, 4}, {1}), [](Graph<double>& g, const std::vector<Var>& v) {
    static const std::vector<int> ids{0, 3, 3, 5, 1};
    return embedding(g, v[0], ids);
  });
  run("attention (padded, bidirectional)",
      [&] {
        ParamStore<double> p;
        p.add("q", random_tensor(rng, {2 * 3, 8}));
        p.add("k", random_tensor(rng, {2 * 4, 8}));
        p.add("v", random_tensor(rng, {2 * 4, 8}));
        return p;
      },
      [](Graph<double>& g, const std::vector<Var>& v) {
        AttentionShape s{2, 3, 4, 2, false, {4, 2}};
        return attention(g, v[0], v[1], v[2], s);
      });
  run("attention (causal)",
      [&] {
        ParamStore<double> p;
        p.add("q", random_tensor(rng, {2 * 4, 8}));
        p.add("k", random_tensor(rng, {2 * 4, 8}));
        p.add("v", random_tensor(rng, {2 * 4, 8}));
        return p;
      },
      [](Graph<double>& g, const std::vector<Var>& v) {
        AttentionShape s{2, 4, 4, 4, true, {4, 3}};
        return attention(g, v[0], v[1], v[2], s);
      });
  run("cross_entropy", two({5, 7}, {1}), [](Graph<double>& g, const std::vector<Var>& v) {
    static const std::vector<int> targets{1, -1, 6, 0, 2};
    return cross_entropy(g, v[0], targets);
  });
  MESSAGE("worst primitive relative error: " << worst);
}

TEST_CASE("unused parameters receive zero gradients") {
  ParamStore<double> p;
  p.add("used", Tensor<double>::scalar(2.0));
  p.add("unused", Tensor<double>({2, 2}, 1.0));
  Graph<double> g;
  Var x = g.parameter(0, p.value(0));
  auto grads = g.backward(mul(g, x, x), p);
  REQUIRE(grads.size() == 2);
  CHECK(grads[1].shape() == Shape{2, 2});
  for (double v : grads[1].values()) CHECK(v == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  ParamStore<double> p;
  p.add("x", Tensor<double>({2}, 1.0));
  Graph<double> g;
  Var x = g.parameter(0, p.value(0));
  Var y = add(g, x, x);
  CHECK_THROWS_AS(g.backward(y, p), Error);
}

TEST_CASE("graph construction rejects forward references") {
  Graph<double> g;
  Var a = g.constant(Tensor<double>::scalar(1.0));
  CHECK_THROWS_AS(g.emit(Tensor<double>::scalar(1.0), {Var{a.id + 1}}, nullptr), Error);
}

TEST_CASE("non-finite values are an error state") {
  Graph<double> g;
  Var a = g.constant(Tensor<double>::scalar(1e308));
  CHECK_THROWS_AS(scale(g, a, 1e10), Error);
}

TEST_CASE("non-recording graph keeps values but no gradients") {
  Graph<float> g(false);
  Var a = g.parameter(0, Tensor<float>::scalar(2.0f));
  Var b = mul(g, a, a);
  CHECK(g.value(b).item() == 4.0f);
  CHECK_FALSE(g.requires_grad(b));
}

TEST_CASE("optimizer: zero gradients and no decay leave params unchanged") {
  for (auto kind : {OptimizerKind::Adam, OptimizerKind::Adamax}) {
    ParamStore<float> p;
    p.add("w", Tensor<float>({2, 3}, 0.75f));
    auto before = p;
    auto state = make_optim_state(kind, p);
    Gradients<float> grads{Tensor<float>({2, 3})};
    optimizer_step(p, grads, state, 0.1, 0.0);
    CHECK(p == before);
    CHECK(state.step == 1);
  }
}

TEST_CASE("optimizer: Adam first step from hand evaluation") {
  // t=1: m=0.1, v=0.001, m_hat=1, v_hat=1 -> p = 1 - 0.1 * 1 / (1 + 1e-8).
  ParamStore<double> p;
  p.add("w", Tensor<double>::scalar(1.0));
  auto state = make_optim_state(OptimizerKind::Adam, p);
  optimizer_step(p, Gradients<double>{Tensor<double>::scalar(1.0)}, state, 0.1, 0.0);
  CHECK(p.value(0).item() == doctest::Approx(0.900000000999999990).epsilon(1e-14));
}

TEST_CASE("optimizer: Adamax first step from hand evaluation") {
  // t=1: m=0.1, u=max(0,|1|)=1, step = lr/(1-0.9) = 1 -> p = 1 - 0.1/(1+1e-8).
  ParamStore<double> p;
  p.add("w", Tensor<double>::scalar(1.0));
  auto state = make_optim_state(OptimizerKind::Adamax, p);
  optimizer_step(p, Gradients<double>{Tensor<double>::scalar(1.0)}, state, 0.1, 0.0);
  CHECK(p.value(0).item() == doctest::Approx(0.900000000999999990).epsilon(1e-14));
}

TEST_CASE("optimizer: decay-only update multiplies by (1 - lr * wd)") {
  ParamStore<double> p;
  p.add("w", Tensor<double>({3}, std::vector<double>{1.0, -2.0, 0.5}));
  auto state = make_optim_state(OptimizerKind::Adam, p);
  optimizer_step(p, Gradients<double>{Tensor<double>({3})}, state, 0.0002, 0.2);
  const double f = 1.0 - 0.0002 * 0.2;
  CHECK(p.value(0)[0] == doctest::Approx(1.0 * f).epsilon(1e-15));
  CHECK(p.value(0)[1] == doctest::Approx(-2.0 * f).epsilon(1e-15));
  CHECK(p.value(0)[2] == doctest::Approx(0.5 * f).epsilon(1e-15));
}

TEST_CASE("optimizer: identical inputs give bit-identical outputs") {
  Rng rng(5);
  ParamStore<float> p;
  p.add("w", random_tensor(rng, {4, 4}).cast<float>());
  Gradients<float> grads{random_tensor(rng, {4, 4}).cast<float>()};
  auto p1 = p, p2 = p;
  auto s1 = make_optim_state(OptimizerKind::Adam, p);
  auto s2 = s1;
  for (int i = 0; i < 3; ++i) {
    optimizer_step(p1, grads, s1, 1e-3, 0.2);
    optimizer_step(p2, grads, s2, 1e-3, 0.2);
  }
  CHECK(p1 == p2);
  CHECK(s1 == s2);
  CHECK(s1.step == 3);
}

TEST_CASE("optimizer: gradient shape mismatch is rejected") {
  ParamStore<float> p;
  p.add("w", Tensor<float>({2, 2}));
  auto state = make_optim_state(OptimizerKind::Adam, p);
  Gradients<float> grads{Tensor<float>({4})};
  CHECK_THROWS_AS(optimizer_step(p, grads, state, 0.1, 0.0), Error);
}

TEST_CASE("lr schedule: warmup, peak, decay and clamp") {
  LrSchedule s;  // paper defaults
  CHECK(lr_at(s, 0) == 0.0);
  CHECK(lr_at(s, 4000) == doctest::Approx(0.0002).epsilon(1e-15));
  CHECK(lr_at(s, s.total_steps) == 0.0);
  CHECK(lr_at(s, s.total_steps + 10) == 0.0);
}

TEST_CASE("lr schedule: piecewise linear with constant increments") {
  LrSchedule s{0.001, 100, 600};
  const double up = s.peak / 100.0;
  const double down = s.peak / 500.0;
  for (std::uint64_t step = 0; step < 700; ++step) {
    const double delta = lr_at(s, step + 1) - lr_at(s, step);
    CHECK(lr_at(s, step) >= 0.0);
    if (step < 100) {
      CHECK(delta == doctest::Approx(up).epsilon(1e-9));
    } else if (step < 600) {
      CHECK(delta == doctest::Approx(-down).epsilon(1e-9));
    } else {
      CHECK(delta == 0.0);
    }
  }
}

TEST_CASE("lr schedule validation") {
  CHECK_THROWS_AS((LrSchedule{0.1, 0, 10}.validate()), Error);
  CHECK_THROWS_AS((LrSchedule{0.1, 10, 10}.validate()), Error);
  CHECK_NOTHROW((LrSchedule{0.1, 1, 10}.validate()));
}
