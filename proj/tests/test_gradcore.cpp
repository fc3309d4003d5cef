// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "odtq/error.hpp"
#include "odtq/param_store.hpp"
#include "odtq/tensor.hpp"
#include "testutil.hpp"

using namespace odtq;
using grad::Tensor;

TEST_CASE("forward ops: spot values") {
  SUBCASE("softmax_masked on [2,1,0.5] with last masked") {
    Tensor logits = Tensor::from_values({3}, {2.0, 1.0, 0.5});
    Tensor p = grad::softmax_masked(logits, {1, 1, 0});
    CHECK(p.at(0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(p.at(1) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
    CHECK(p.at(2) == 0.0);
    CHECK(p.at(0) + p.at(1) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("all-masked softmax is a contract error") {
    Tensor logits = Tensor::from_values({2}, {1.0, 2.0});
    CHECK_THROWS_AS(grad::softmax_masked(logits, {0, 0}), Error);
  }
  SUBCASE("softplus(0) = ln 2") {
    Tensor x = Tensor::scalar(0.0);
    CHECK(grad::softplus(x).value() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
  SUBCASE("matmul by identity") {
    Tensor eye = Tensor::from_values({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor a = Tensor::from_values({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor out = grad::matmul(eye, a);
    for (int i = 0; i < 9; ++i) CHECK(out.values()[i] == a.values()[i]);
  }
  SUBCASE("shape mismatch raises") {
    Tensor a = Tensor::from_values({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_values({3}, {1, 2, 3});
    CHECK_THROWS_AS(grad::matmul(a, b), Error);
    CHECK_THROWS_AS(grad::add(a, b), Error);
  }
}

TEST_CASE("backward: analytic example and accumulation semantics") {
  SUBCASE("d sum(x^2) / dx = 2x") {
    Tensor x = Tensor::from_values({1}, {3.0}, true);
    Tensor loss = grad::sum_all(grad::mul(x, x));
    grad::backward(loss);
    CHECK(x.grad_values()[0] == doctest::Approx(6.0));
  }
  SUBCASE("repeated backward without reset accumulates") {
    Tensor x = Tensor::from_values({1}, {3.0}, true);
    Tensor loss = grad::sum_all(grad::mul(x, x));
    grad::backward(loss);
    grad::backward(loss);
    CHECK(x.grad_values()[0] == doctest::Approx(12.0));
  }
  SUBCASE("non-scalar loss rejected") {
    Tensor x = Tensor::from_values({2}, {1.0, 2.0}, true);
    CHECK_THROWS_AS(grad::backward(x), Error);
  }
  SUBCASE("shared subexpression gets both contributions") {
    Tensor x = Tensor::from_values({1}, {2.0}, true);
    Tensor y = grad::mul(x, x);            // x^2
    Tensor loss = grad::sum_all(grad::add(y, y));  // 2 x^2
    grad::backward(loss);
    CHECK(x.grad_values()[0] == doctest::Approx(8.0));
  }
}

TEST_CASE("gradient check: every differentiable op vs finite differences") {
  // >= 20 random trials per op, relative error < 1e-4
  const double tol = 1e-4;
  for (uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(mix_seed(900, trial));
    grad::ParamStore ps;
    ps.add_normal("a", {3, 4}, rng, 1.0);
    ps.add_normal("b", {4, 2}, rng, 1.0);
    ps.add_normal("v", {4}, rng, 1.0);
    ps.add_normal("w", {4}, rng, 1.0);
    ps.add_normal("table", {5, 3}, rng, 1.0);

    auto check = [&](const char* what, std::function<Tensor()> loss) {
      auto r = testutil::check_gradients(ps, loss, 0, trial);
      INFO(what);
      CHECK(r.max_rel_err < tol);
    };

    check("matmul+sum", [&] {
      return grad::sum_all(grad::matmul(ps.get("a"), ps.get("b")));
    });
    check("add/sub/mul mix", [&] {
      Tensor v = ps.get("v"), w = ps.get("w");
      return grad::sum_all(grad::mul(grad::add(v, w), grad::sub(v, w)));
    });
    check("tanh", [&] { return grad::sum_all(grad::tanh_fn(ps.get("v"))); });
    check("sigmoid", [&] { return grad::sum_all(grad::sigmoid(ps.get("v"))); });
    check("softplus", [&] { return grad::sum_all(grad::softplus(ps.get("v"))); });
    check("relu", [&] { return grad::sum_all(grad::relu(ps.get("v"))); });
    check("abs", [&] { return grad::sum_all(grad::abs_fn(ps.get("v"))); });
    check("log(softplus)", [&] {
      return grad::sum_all(grad::log_fn(grad::softplus(ps.get("v"))));
    });
    check("softmax_masked log-component", [&] {
      Tensor p = grad::softmax_masked(ps.get("v"), {1, 1, 0, 1});
      return grad::log_fn(grad::pick(p, 1));
    });
    check("concat+dot", [&] {
      Tensor c = grad::concat({ps.get("v"), ps.get("w")});
      return grad::dot(c, c);
    });
    check("gather_rows", [&] {
      Tensor g = grad::gather_rows(ps.get("table"), {0, 2, 2, 4});
      return grad::sum_all(grad::tanh_fn(g));
    });
    check("sum_over_axis chain", [&] {
      Tensor rows = grad::sum_over_axis(ps.get("a"), 0);   // [4]
      Tensor cols = grad::sum_over_axis(ps.get("a"), 1);   // [3]
      return grad::add(grad::dot(rows, ps.get("v")),
                       grad::sum_all(grad::sigmoid(cols)));
    });
    check("mul_scalar", [&] {
      Tensor s = grad::pick(ps.get("v"), 0);
      return grad::sum_all(grad::mul_scalar(ps.get("w"), s));
    });
    check("softmax sums over unmasked within 1e-12", [&] {
      Tensor p = grad::softmax_masked(ps.get("w"), {1, 0, 1, 1});
      double s = p.at(0) + p.at(2) + p.at(3);
      CHECK(std::abs(s - 1.0) < 1e-12);
      return grad::pick(p, 3);
    });
  }
}

TEST_CASE("optimizer: fixed points, direction, convergence") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    grad::ParamStore ps;
    Rng rng(4);
    ps.add_normal("p", {3}, rng, 1.0);
    std::vector<double> before = ps.get("p").values();
    ps.zero_grads();
    ps.adam_step(0.1);
    CHECK(ps.get("p").values() == before);
  }
  SUBCASE("constant gradient moves monotonically against its sign") {
    grad::ParamStore ps;
    ps.add("p", {1});
    double prev = 0.0;
    for (int i = 0; i < 50; ++i) {
      Tensor loss = grad::scale(ps.get("p"), 2.0);  // d/dp = +2
      grad::backward(grad::sum_all(loss));
      ps.adam_step(0.01);
      double cur = ps.get("p").value();
      CHECK(cur < prev);
      prev = cur;
    }
  }
  SUBCASE("quadratic bowl: 200 steps shrink the loss by 1e3") {
    grad::ParamStore ps;
    Rng rng(8);
    ps.add_normal("x", {4}, rng, 2.0);
    auto loss_value = [&] {
      double s = 0.0;
      for (double v : ps.get("x").values()) s += v * v;
      return s;
    };
    double initial = loss_value();
    for (int i = 0; i < 200; ++i) {
      Tensor x = ps.get("x");
      grad::backward(grad::sum_all(grad::mul(x, x)));
      ps.adam_step(0.05);
    }
    CHECK(loss_value() < 1e-3 * initial);
  }
  SUBCASE("NaN gradient aborts naming the parameter") {
    grad::ParamStore ps;
    ps.add("bad_param", {1});
    Tensor x = ps.get("bad_param");
    Tensor loss = grad::log_fn(x);  // log(0) = -inf, grad 1/0 = inf
    grad::backward(loss);
    CHECK_THROWS_WITH_AS(ps.adam_step(0.1), doctest::Contains("bad_param"), Error);
  }
}

TEST_CASE("optimizer determinism: same seed, same schedule, identical bits") {
  auto run = [] {
    grad::ParamStore ps;
    Rng rng(77);
    ps.add_normal("w", {4, 4}, rng, 1.0);
    ps.add_normal("v", {4}, rng, 1.0);
    for (int i = 0; i < 25; ++i) {
      Tensor out = grad::matmul(ps.get("v"), ps.get("w"));
      grad::backward(grad::sum_all(grad::tanh_fn(out)));
      ps.adam_step(0.01);
    }
    std::vector<double> all;
    for (auto& [name, t] : ps.params())
      all.insert(all.end(), t.values().begin(), t.values().end());
    return all;
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint: round trip, rejected versions") {
  std::string dir = testutil::scratch_dir("gradcore_ckpt");
  std::string path = dir + "/model.ckpt";

  grad::ParamStore ps;
  Rng rng(5);
  ps.add_normal("layer.w", {3, 2}, rng, 1.0);
  ps.add_normal("layer.b", {2}, rng, 1.0);
  ps.set_meta("arch", 32.0);
  ps.save(path);

  grad::ParamStore loaded = grad::ParamStore::load(path);
  CHECK(loaded.get("layer.w").values() == ps.get("layer.w").values());
  CHECK(loaded.get("layer.w").shape() == ps.get("layer.w").shape());
  CHECK(loaded.meta("arch") == 32.0);
  CHECK(loaded.get("layer.w").requires_grad());
  CHECK_FALSE(loaded.get("meta.arch").requires_grad());

  SUBCASE("unknown version is rejected") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    char v2[4] = {9, 0, 0, 0};
    f.write(v2, 4);
    f.close();
    CHECK_THROWS_WITH_AS(grad::ParamStore::load(path),
                         doctest::Contains("unsupported checkpoint version"), Error);
  }
  SUBCASE("wrong magic is rejected") {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPTxxxx";
    f.close();
    CHECK_THROWS_AS(grad::ParamStore::load(path), Error);
  }
}
