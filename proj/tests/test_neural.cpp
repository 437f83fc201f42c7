#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adam.hpp"
#include "errors.hpp"
#include "gradcheck.hpp"
#include "models.hpp"
#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

using namespace gfs;

namespace {
Tensor<double> tensor_of(size_t rows, size_t cols,
                         std::initializer_list<double> vals) {
  Tensor<double> t(rows, cols);
  size_t i = 0;
  for (double v : vals) t.v[i++] = v;
  return t;
}
}  // namespace

TEST_CASE("dense forward") {
  Tape<double> tape;
  // W = I, b = 0 -> identity.
  Tensor<double> eye(3, 3);
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  auto y = tape.add_bias(tape.matmul(tape.constant(eye),
                                     tape.constant(tensor_of(3, 1, {4, 5, 6}))),
                         tape.constant(Tensor<double>(3, 1)));
  CHECK(tape.val(y).v == std::vector<double>{4, 5, 6});
  // 1x1: W=[2], b=[3], x=[4] -> 11.
  Tape<double> t2;
  auto z = t2.add_bias(t2.matmul(t2.constant(tensor_of(1, 1, {2})),
                                 t2.constant(tensor_of(1, 1, {4}))),
                       t2.constant(tensor_of(1, 1, {3})));
  CHECK(t2.val(z).v[0] == doctest::Approx(11.0));
}

TEST_CASE("full-width conv as matrix contraction") {
  // One-hot kernel selects one input coordinate.
  Tape<double> tape;
  Tensor<double> kernels(2, 4);
  kernels.at(0, 2) = 1.0;  // one-hot at position 2
  kernels.at(1, 0) = 1.0;
  auto x = tape.constant(tensor_of(4, 1, {7, 8, 9, 10}));
  auto out = tape.matmul(tape.constant(kernels), x);
  CHECK(tape.val(out).v[0] == 9.0);
  CHECK(tape.val(out).v[1] == 7.0);
}

TEST_CASE("activation values") {
  Tape<double> tape;
  auto x = tape.constant(tensor_of(3, 1, {0.0, 500.0, -2.0}));
  CHECK(tape.val(tape.sigmoid(x)).v[0] == doctest::Approx(0.5));
  CHECK(std::isfinite(tape.val(tape.sigmoid(x)).v[1]));
  CHECK(tape.val(tape.tanh_(x)).v[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(tape.val(tape.tanh_(x)).v[0] == 0.0);
  CHECK(tape.val(tape.relu(x)).v[2] == 0.0);
  // Stable sigmoid at large negative input.
  auto neg = tape.constant(tensor_of(1, 1, {-500.0}));
  CHECK(std::isfinite(tape.val(tape.sigmoid(neg)).v[0]));
}

TEST_CASE("batchnorm training and inference modes") {
  ParamStore<double> store;
  Param<double>& gamma = store.add("gamma", 2, 1);
  Param<double>& beta = store.add("beta", 2, 1);
  gamma.value.v = {1.0, 1.0};
  beta.value.v = {0.0, 0.5};
  Tensor<double> rm(2, 1), rv(2, 1);
  rv.v = {1.0, 1.0};
  BnState<double> state{&rm, &rv};

  // Zero-mean, unit-variance batch passes through (up to epsilon).
  Tape<double> tape;
  Tensor<double> x(2, 2);
  x.at(0, 0) = -1.0;
  x.at(0, 1) = 1.0;
  x.at(1, 0) = -1.0;
  x.at(1, 1) = 1.0;
  auto y = tape.batchnorm(tape.constant(x), tape.leaf(gamma), tape.leaf(beta),
                          state, true);
  CHECK(tape.val(y).at(0, 0) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(tape.val(y).at(0, 1) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(tape.val(y).at(1, 0) == doctest::Approx(-0.5).epsilon(1e-3));

  // Constant batch -> output = beta.
  Tape<double> t2;
  Tensor<double> c(2, 3);
  for (auto& v : c.v) v = 4.2;
  auto yc = t2.batchnorm(t2.constant(c), t2.leaf(gamma), t2.leaf(beta), state,
                         true);
  for (size_t col = 0; col < 3; ++col) {
    CHECK(t2.val(yc).at(0, col) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(t2.val(yc).at(1, col) == doctest::Approx(0.5).epsilon(1e-9));
  }

  // Batch of one is rejected in training mode, allowed in inference.
  Tape<double> t3;
  Tensor<double> one(2, 1);
  CHECK_THROWS_AS(
      t3.batchnorm(t3.constant(one), t3.leaf(gamma), t3.leaf(beta), state,
                   true),
      InvalidArgument);
  CHECK_NOTHROW(t3.batchnorm(t3.constant(one), t3.leaf(gamma), t3.leaf(beta),
                             state, false));
}

TEST_CASE("lstm cell closed-form cases") {
  ParamStore<double> store;
  LstmCellParams<double> cell;
  cell.build(store, "cell", 3, 3);  // all parameters start at zero

  Tape<double> tape;
  Tensor<double> z(3, 2), o0(3, 2), c0(3, 2);
  for (auto& v : z.v) v = 0.7;
  auto [o1, c1] = lstm_cell_step(tape, tape.constant(z), tape.constant(o0),
                                 tape.constant(c0), cell);
  // Zero params: gates = 0.5, candidate tanh(0) = 0 -> c = 0, o = 0.
  for (double v : tape.val(c1).v) CHECK(v == doctest::Approx(0.0));
  for (double v : tape.val(o1).v) CHECK(v == doctest::Approx(0.0));

  // Forget gate ~1, input gate ~0: cell state is carried through.
  for (auto& v : store.find("cell.b_f")->value.v) v = 40.0;
  for (auto& v : store.find("cell.b_i")->value.v) v = -40.0;
  Tape<double> t2;
  Tensor<double> cprev(3, 2);
  for (size_t i = 0; i < cprev.size(); ++i) cprev.v[i] = 0.1 * (i + 1);
  auto [o2, c2] = lstm_cell_step(t2, t2.constant(z), t2.constant(o0),
                                 t2.constant(cprev), cell);
  for (size_t i = 0; i < cprev.size(); ++i)
    CHECK(t2.val(c2).v[i] == doctest::Approx(cprev.v[i]).epsilon(1e-9));
}

TEST_CASE("bce loss values and domain") {
  Tape<double> tape;
  // q = 0.5 everywhere -> N_R * log 2 per sample.
  Tensor<double> q(4, 3);
  for (auto& v : q.v) v = 0.5;
  Tensor<double> t(4, 3);
  t.v = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  auto loss = tape.bce_loss(tape.constant(q), t);
  CHECK(tape.val(loss).v[0] == doctest::Approx(4.0 * std::log(2.0)));

  // Perfect prediction at the clamp boundary: loss ~ 0.
  Tape<double> t2;
  Tensor<double> exact(2, 1);
  exact.v = {1.0, 0.0};
  Tensor<double> target(2, 1);
  target.v = {1.0, 0.0};
  auto l2 = t2.bce_loss(t2.constant(exact), target);
  CHECK(t2.val(l2).v[0] == doctest::Approx(0.0).epsilon(1e-5));

  // Targets restricted to {0,1}.
  Tape<double> t3;
  Tensor<double> bad(2, 1);
  bad.v = {0.5, 0.0};
  CHECK_THROWS_AS(t3.bce_loss(t3.constant(exact), bad), InvalidArgument);
}

TEST_CASE("fold_symbols layout") {
  // [f x n_sym*B] with column i*B+b -> [(n_sym*f) x B].
  Tape<double> tape;
  Tensor<double> x(2, 4);  // f=2, n_sym=2, B=2
  for (size_t i = 0; i < x.size(); ++i) x.v[i] = static_cast<double>(i);
  auto folded = tape.fold_symbols(tape.constant(x), 2, 2);
  const Tensor<double>& F = tape.val(folded);
  REQUIRE(F.rows == 4);
  REQUIRE(F.cols == 2);
  for (size_t b = 0; b < 2; ++b)
    for (size_t i = 0; i < 2; ++i)
      for (size_t r = 0; r < 2; ++r)
        CHECK(F.at(i * 2 + r, b) == x.at(r, i * 2 + b));
}

TEST_CASE("adam steps") {
  ParamStore<float> store;
  Param<float>& p = store.add("p", 1, 1);
  p.value.v[0] = 1.0f;
  p.grad = Tensor<float>(1, 1);
  Adam<float> opt({&p}, 0.01f);
  // Zero gradient: unchanged.
  p.grad.v[0] = 0.0f;
  opt.step();
  CHECK(p.value.v[0] == 1.0f);
  // First unit-gradient step of a fresh optimizer moves by ~ -lr
  // (bias correction makes mhat/sqrt(vhat) exactly 1 at t = 1).
  Adam<float> fresh({&p}, 0.01f);
  p.grad.v[0] = 1.0f;
  float before = p.value.v[0];
  fresh.step();
  CHECK(before - p.value.v[0] == doctest::Approx(0.01f).epsilon(1e-3));

  // Determinism: same gradient stream, same trajectory, bit for bit.
  ParamStore<float> s1, s2;
  Param<float>& a = s1.add("a", 2, 1);
  Param<float>& b = s2.add("a", 2, 1);
  a.value.v = {0.5f, -0.25f};
  b.value.v = {0.5f, -0.25f};
  Adam<float> o1({&a}, 0.001f), o2({&b}, 0.001f);
  Rng r1(42), r2(42);
  for (int i = 0; i < 50; ++i) {
    a.grad = Tensor<float>(2, 1);
    b.grad = Tensor<float>(2, 1);
    for (int k = 0; k < 2; ++k) {
      a.grad.v[k] = static_cast<float>(r1.gaussian());
      b.grad.v[k] = static_cast<float>(r2.gaussian());
    }
    o1.step();
    o2.step();
  }
  CHECK(a.value.v == b.value.v);
}

TEST_CASE("bce decreases on a separable toy problem") {
  ParamStore<float> store;
  Param<float>& w = store.add("w", 1, 2);
  Param<float>& b = store.add("b", 1, 1);
  w.value.v = {0.1f, -0.1f};
  Adam<float> opt(store.trainable(), 0.05f);
  Tensor<float> x(2, 4);
  x.v = {1, -1, 1, -1, 1, 1, -1, -1};
  Tensor<float> target(1, 4);
  target.v = {1, 0, 1, 0};
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 100; ++step) {
    Tape<float> tape;
    auto q = tape.sigmoid(tape.add_bias(
        tape.matmul(tape.leaf(w), tape.constant(x)), tape.leaf(b)));
    auto loss = tape.bce_loss(q, target);
    double v = tape.val(loss).v[0];
    CHECK(v >= 0.0);
    if (step == 0) first = v;
    last = v;
    for (auto* p : store.trainable()) p->zero_grad();
    tape.backward(loss);
    opt.step();
  }
  CHECK(last < first);
}

TEST_CASE("no NaN/Inf from finite forward passes") {
  Rng rng(0xabc);
  Tape<float> tape;
  Tensor<float> x(8, 64);
  for (auto& v : x.v) v = static_cast<float>(rng.gaussian() * 100.0);
  auto h = tape.sigmoid(tape.constant(x));
  auto g = tape.tanh_(tape.constant(x));
  for (float v : tape.val(h).v) CHECK(std::isfinite(v));
  for (float v : tape.val(g).v) CHECK(std::isfinite(v));
}
