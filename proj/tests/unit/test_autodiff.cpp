// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "grassy/autodiff.hpp"
#include "grassy/error.hpp"
#include "grassy/nn.hpp"
#include "grassy/random.hpp"

using namespace grassy;
using namespace grassy::ad;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Weighted sum so every output coordinate carries a distinct gradient.
Var probe(Tape& t, Var y) {
  std::mt19937_64 rng(1234 + y.rows() * 31 + y.cols());
  return sum(mul(y, t.constant(random_matrix(y.rows(), y.cols(), rng))));
}

double check_unary(const std::function<Var(Var)>& op, Matrix x) {
  Parameter p("x", std::move(x));
  std::vector<Parameter*> ps{&p};
  return gradient_check(ps, [&](Tape& t) { return probe(t, op(t.leaf(p))); }).max_error;
}

double check_binary(const std::function<Var(Var, Var)>& op, Matrix a, Matrix b) {
  Parameter pa("a", std::move(a)), pb("b", std::move(b));
  std::vector<Parameter*> ps{&pa, &pb};
  return gradient_check(ps, [&](Tape& t) { return probe(t, op(t.leaf(pa), t.leaf(pb))); }).max_error;
}

}  // namespace

TEST_CASE("elementwise and reduction ops pass finite-difference checks") {
  std::mt19937_64 rng(1);
  const double tol = 1e-7;
  CHECK(check_unary([](Var a) { return relu(a); }, random_matrix(3, 4, rng)) < tol);
  CHECK(check_unary([](Var a) { return sigmoid(a); }, random_matrix(3, 4, rng)) < tol);
  CHECK(check_unary([](Var a) { return tanh(a); }, random_matrix(3, 4, rng)) < tol);
  CHECK(check_unary([](Var a) { return exp(a); }, random_matrix(3, 4, rng)) < tol);
  CHECK(check_unary([](Var a) { return log(a); }, random_matrix(3, 4, rng, 0.5, 2.0)) < tol);
  CHECK(check_unary([](Var a) { return pow(a, 1.7); }, random_matrix(3, 4, rng, 0.5, 2.0)) < tol);
  CHECK(check_unary([](Var a) { return pow(a, 3.0); }, random_matrix(3, 4, rng)) < tol);
  for (int q = 1; q <= 4; ++q) CHECK(check_unary([q](Var a) { return abs_pow(a, q); }, random_matrix(3, 4, rng)) < tol);
  CHECK(check_unary([](Var a) { return softmax_rows(a); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return sum_rows(a); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return mean(a); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return frobenius_norm(a); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return transpose(a); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return reshape(a, 5, 3); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return slice(a, 1, 3, 2, 5); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return scale(add_scalar(neg(a), 2.0), 0.3); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return clamp(a, -0.5, 0.5); }, random_matrix(3, 5, rng)) < tol);
  CHECK(check_unary([](Var a) { return sym_from_upper(a, 4); }, random_matrix(1, 6, rng)) < tol);
}

TEST_CASE("binary ops pass finite-difference checks") {
  std::mt19937_64 rng(2);
  const double tol = 1e-7;
  CHECK(check_binary([](Var a, Var b) { return matmul(a, b); }, random_matrix(3, 4, rng), random_matrix(4, 2, rng)) < tol);
  CHECK(check_binary([](Var a, Var b) { return a + b; }, random_matrix(3, 4, rng), random_matrix(3, 4, rng)) < tol);
  CHECK(check_binary([](Var a, Var b) { return a - b; }, random_matrix(3, 4, rng), random_matrix(3, 4, rng)) < tol);
  CHECK(check_binary([](Var a, Var b) { return mul(a, b); }, random_matrix(3, 4, rng), random_matrix(3, 4, rng)) < tol);
  CHECK(check_binary([](Var a, Var b) { return add_bias(a, b); }, random_matrix(3, 4, rng), random_matrix(1, 4, rng)) < tol);
  CHECK(check_binary([](Var a, Var b) { return concat_cols({a, b, a}); }, random_matrix(2, 3, rng), random_matrix(2, 1, rng)) < tol);
  CHECK(check_binary([](Var a, Var b) { return concat_rows({b, a}); }, random_matrix(2, 3, rng), random_matrix(1, 3, rng)) < tol);
}

TEST_CASE("a value used twice receives both contributions") {
  Parameter p("x", Matrix(1, 1, 3.0));
  Tape t;
  const Var x = t.leaf(p);
  t.backward(sum(mul(x, x) + scale(x, 2.0)));
  CHECK(p.grad(0, 0) == doctest::Approx(2.0 * 3.0 + 2.0));
}

TEST_CASE("constants receive no gradient and variables do") {
  Tape t;
  const Var c = t.constant(Matrix(2, 2, 1.0));
  const Var v = t.variable(Matrix(2, 2, 2.0));
  t.backward(sum(mul(c, v)));
  CHECK(t.grad(v) == Matrix(2, 2, 1.0));
  CHECK_FALSE(t.requires_grad(c.id()));
}

TEST_CASE("shape and loss errors") {
  Tape t;
  const Var a = t.constant(Matrix(2, 3));
  const Var b = t.constant(Matrix(2, 3));
  try {
    matmul(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
  CHECK_THROWS_AS(add(a, t.constant(Matrix(3, 2))), Error);
  CHECK_THROWS_AS(reshape(a, 4, 2), Error);
  try {
    t.backward(a);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonScalarLoss);
  }
}

TEST_CASE("adam step follows the bias-corrected update") {
  Parameter p("w", Matrix(1, 2, std::vector<double>{1.0, -1.0}));
  p.grad = Matrix(1, 2, std::vector<double>{0.5, -2.0});
  std::vector<Parameter*> ps{&p};
  OptimizerState s;
  s.config.lr = 0.1;
  adam_step(ps, s);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  CHECK(p.value(0, 1) == doctest::Approx(-1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
  p.grad = Matrix(1, 2, std::vector<double>{0.5, -2.0});
  adam_step(ps, s);
  CHECK(s.step == 2);
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 0.2 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  Parameter q("q", Matrix(3, 3));
  std::vector<Parameter*> more{&p, &q};
  CHECK_THROWS_AS(adam_step(more, s), Error);
}

TEST_CASE("three-layer network gradient") {
  Rng rng(5);
  nn::Mlp mlp({4, 6, 5, 2}, nn::Activation::Tanh, nn::Activation::Sigmoid, "mlp", rng);
  std::mt19937_64 g(5);
  const Matrix x = random_matrix(3, 4, g);
  const auto params = mlp.parameters();
  const auto result = gradient_check(params, [&](Tape& t) { return probe(t, mlp.forward(t, t.constant(x))); });
  CHECK(result.coordinates == 4 * 6 + 6 + 6 * 5 + 5 + 5 * 2 + 2);
  CHECK(result.max_error < 1e-6);
}

TEST_CASE("pure and taped network evaluation agree bitwise") {
  Rng rng(6);
  nn::Mlp mlp({5, 8, 3}, nn::Activation::Relu, nn::Activation::None, "m", rng);
  std::mt19937_64 g(6);
  const Matrix x = random_matrix(4, 5, g);
  Tape t;
  CHECK(mlp.forward(t, t.constant(x)).value() == mlp.forward(x));
  Tape f;
  CHECK(mlp.forward_frozen(f, f.constant(x)).value() == mlp.forward(x));
}

TEST_CASE("frozen forward leaves parameter gradients untouched") {
  Rng rng(7);
  nn::Mlp mlp({2, 3, 1}, nn::Activation::Relu, nn::Activation::None, "m", rng);
  const auto ps = mlp.parameters();
  zero_grad(ps);
  Tape t;
  const Var x = t.variable(Matrix(1, 2, 1.0));
  t.backward(sum(mlp.forward_frozen(t, x)));
  for (const Parameter* p : ps) CHECK(max_abs(p->grad) == 0.0);
  CHECK(t.grad(x).rows() == 1);
}

TEST_CASE("glorot initialization bounds and naming") {
  Rng rng(8);
  nn::Linear l(30, 20, "enc.0", rng);
  const double bound = std::sqrt(6.0 / 50.0);
  CHECK(l.weight.name == "enc.0.weight");
  CHECK(l.bias.name == "enc.0.bias");
  CHECK(max_abs(l.weight.value) <= bound);
  CHECK(max_abs(l.bias.value) == 0.0);
  CHECK_THROWS_AS(nn::Mlp({4}, nn::Activation::Relu, nn::Activation::None, "x", rng), Error);
}

TEST_CASE("snapshot and restore") {
  Rng rng(9);
  nn::Mlp mlp({2, 2}, nn::Activation::Relu, nn::Activation::None, "m", rng);
  const auto ps = mlp.parameters();
  const auto snap = nn::snapshot(ps);
  ps[0]->value(0, 0) += 1.0;
  nn::restore(ps, snap);
  CHECK(ps[0]->value == snap[0]);
}
