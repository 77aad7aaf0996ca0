#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mentor/error.hpp"
#include "mentor/netcore/grad_check.hpp"
#include "mentor/netcore/layers.hpp"
#include "mentor/netcore/lstm.hpp"
#include "mentor/netcore/optimizer.hpp"
#include "test_support.hpp"

using namespace mentor;
using namespace mentor::netcore;
using mentor::testing::probe_loss;
using mentor::testing::random_array;

constexpr double kGradTol = 1e-5;

TEST_CASE("dense_forward small examples") {
  const RealArray w = RealArray::from_rows({{0.3}, {-0.7}});
  const RealArray out = dense_forward(RealArray::from_rows({{0, 0}}), w, RealArray::vector(1), Activation::identity);
  CHECK(out(0, 0) == 0.0);

  const RealArray s = dense_forward(RealArray::from_rows({{1}}), RealArray::from_rows({{0}}),
                                    RealArray::vector(1, 0.0), Activation::sigmoid);
  CHECK(s(0, 0) == 0.5);
  const double c = 1.7;
  const RealArray s2 = dense_forward(RealArray::from_rows({{1}}), RealArray::from_rows({{0}}),
                                     RealArray::vector(1, c), Activation::sigmoid);
  CHECK(s2(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-c))));
}

TEST_CASE("dense_forward matches a naive matmul oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const RealArray x = random_array({3, 4}, rng);
    const RealArray w = random_array({4, 2}, rng);
    const RealArray b = random_array({2}, rng);
    RealArray expect = mentor::testing::naive_matmul(x, w);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) expect(i, j) += b[j];
    CHECK(mentor::testing::max_abs_diff(dense_forward(x, w, b, Activation::identity), expect) <= 1e-12);
  }
}

TEST_CASE("dense_forward rejects mismatched shapes") {
  CHECK_THROWS_AS(dense_forward(RealArray::matrix(2, 3), RealArray::matrix(4, 2), RealArray::vector(2),
                                Activation::identity),
                  DimensionError);
  CHECK_THROWS_AS(dense_forward(RealArray::matrix(2, 3), RealArray::matrix(3, 2), RealArray::vector(3),
                                Activation::identity),
                  DimensionError);
}

TEST_CASE("dense_backward: closed forms, zero upstream, missing cache") {
  Rng rng(2);
  const RealArray x = random_array({3, 2}, rng);
  const RealArray w = random_array({2, 4}, rng);
  const RealArray b = random_array({4}, rng);
  DenseCache cache;
  const RealArray y = dense_forward(x, w, b, Activation::identity, &cache);

  const LayerGrads ones = dense_backward(cache, RealArray(y.shape(), 1.0));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double col_sum = x(0, i) + x(1, i) + x(2, i);
      CHECK(ones.params[0](i, j) == doctest::Approx(col_sum));
    }

  const LayerGrads zero = dense_backward(cache, RealArray(y.shape(), 0.0));
  for (const auto& g : zero.params) CHECK(g.squared_norm() == 0.0);
  CHECK(zero.input.squared_norm() == 0.0);

  CHECK_THROWS_AS(dense_backward(DenseCache{}, y), StateError);
}

TEST_CASE("dense_backward matches finite differences for every activation") {
  Rng rng(3);
  const std::pair<std::size_t, std::size_t> shapes[] = {{3, 4}, {1, 5}, {6, 2}};
  for (Activation act : {Activation::identity, Activation::tanh, Activation::sigmoid}) {
    for (auto [d_in, d_out] : shapes) {
      RealArray x = random_array({4, d_in}, rng);
      RealArray w = random_array({d_in, d_out}, rng);
      RealArray b = random_array({d_out}, rng);
      const RealArray probe = random_array({4, d_out}, rng);
      DenseCache cache;
      dense_forward(x, w, b, act, &cache);
      const LayerGrads g = dense_backward(cache, probe);
      const auto loss = [&] { return probe_loss(dense_forward(x, w, b, act), probe); };
      RealArray* params[] = {&w, &b, &x};
      const RealArray analytic[] = {g.params[0], g.params[1], g.input};
      const auto r = grad_check(loss, params, analytic);
      CHECK(r.max_error <= kGradTol);
    }
  }
}

TEST_CASE("embedding lookup and sparse backward") {
  const RealArray zeros = RealArray::matrix(4, 3);
  CHECK(embedding_lookup(zeros, 2).squared_norm() == 0.0);
  CHECK_THROWS_AS(embedding_lookup(zeros, 4), BoundsError);
  CHECK_THROWS_AS(embedding_lookup(zeros, -1), BoundsError);

  Rng rng(4);
  RealArray table = random_array({5, 3}, rng);
  const std::vector<int> idx = {3, 1, 3};
  const RealArray probe = random_array({3, 3}, rng);
  RealArray grad = RealArray::matrix(5, 3);
  embedding_backward(grad, idx, probe);
  for (std::size_t r : {0u, 2u, 4u}) {
    for (double v : grad.row(r)) CHECK(v == 0.0);
  }
  const auto loss = [&] { return probe_loss(embedding_lookup(table, idx), probe); };
  RealArray* params[] = {&table};
  const RealArray analytic[] = {grad};
  CHECK(grad_check(loss, params, analytic).max_error <= kGradTol);
}

TEST_CASE("lstm cell: zero parameters give zero output, bounded output") {
  const LstmCell zero = LstmCell::zeros(2, 4);
  const LstmState s0{RealArray::matrix(3, 4), RealArray::matrix(3, 4)};
  const LstmState s1 = lstm_cell_step(RealArray::matrix(3, 2), s0, zero);
  CHECK(s1.h.squared_norm() == 0.0);

  Rng rng(5);
  const LstmCell cell = LstmCell::init(2, 4, rng);
  LstmState s{random_array({3, 4}, rng), random_array({3, 4}, rng)};
  for (int t = 0; t < 10; ++t) {
    s = lstm_cell_step(random_array({3, 2}, rng), s, cell);
    for (double v : s.h.span()) CHECK(std::abs(v) < 1.0);
  }
  CHECK_THROWS_AS(lstm_cell_step(RealArray::matrix(3, 3), s0, zero), DimensionError);
}

TEST_CASE("lstm cell backward matches finite differences over all parameter arrays") {
  Rng rng(6);
  const std::tuple<std::size_t, std::size_t, std::size_t> shapes[] = {{2, 3, 2}, {3, 5, 4}, {1, 2, 1}};
  for (auto [b, hidden, in] : shapes) {
    LstmCell cell = LstmCell::init(in, hidden, rng);
    for (auto& p : cell.params) p = random_array(p.shape(), rng, 0.8);
    RealArray x = random_array({b, in}, rng);
    LstmState prev{random_array({b, hidden}, rng), random_array({b, hidden}, rng)};
    const RealArray ph = random_array({b, hidden}, rng);
    const RealArray pc = random_array({b, hidden}, rng);
    LstmStepCache cache;
    lstm_cell_step(x, prev, cell, &cache);
    const LstmStepGrads g = lstm_cell_backward(cache, cell, ph, pc);
    const auto loss = [&] {
      const LstmState s = lstm_cell_step(x, prev, cell);
      return probe_loss(s.h, ph) + probe_loss(s.c, pc);
    };
    std::vector<RealArray*> params;
    std::vector<RealArray> analytic;
    for (std::size_t k = 0; k < LstmCell::kParamCount; ++k) {
      params.push_back(&cell.params[k]);
      analytic.push_back(g.params[k]);
    }
    params.push_back(&x);
    analytic.push_back(g.x);
    params.push_back(&prev.h);
    analytic.push_back(g.h_prev);
    params.push_back(&prev.c);
    analytic.push_back(g.c_prev);
    const auto r = grad_check(loss, params, analytic);
    CHECK(r.per_param.size() == 11);
    CHECK(r.max_error <= kGradTol);
  }
}

TEST_CASE("bilstm: degenerate sequence, reversal symmetry, empty input") {
  Rng rng(7);
  const LstmCell f = LstmCell::init(2, 3, rng);
  const LstmCell bw = LstmCell::init(2, 3, rng);
  const RealArray x = random_array({2, 2}, rng);

  const RealArray one = bilstm_encode({x}, f, bw);
  const LstmState zero{RealArray::matrix(2, 3), RealArray::matrix(2, 3)};
  const RealArray hf = lstm_cell_step(x, zero, f).h;
  const RealArray hb = lstm_cell_step(x, zero, bw).h;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(one(i, j) == hf(i, j));
      CHECK(one(i, 3 + j) == hb(i, j));
    }

  std::vector<RealArray> seq = {random_array({2, 2}, rng), random_array({2, 2}, rng), random_array({2, 2}, rng)};
  std::vector<RealArray> rev(seq.rbegin(), seq.rend());
  const RealArray a = bilstm_encode(seq, f, f);
  const RealArray r = bilstm_encode(rev, f, f);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(a(i, j) == r(i, 3 + j));
      CHECK(a(i, 3 + j) == r(i, j));
    }

  CHECK_THROWS_AS(bilstm_encode({}, f, bw), InputError);
}

TEST_CASE("bilstm backward matches finite differences through T=3") {
  Rng rng(8);
  for (std::size_t steps : {1u, 3u, 4u}) {
    LstmCell f = LstmCell::init(2, 3, rng);
    LstmCell bw = LstmCell::init(2, 3, rng);
    std::vector<RealArray> seq;
    for (std::size_t t = 0; t < steps; ++t) seq.push_back(random_array({2, 2}, rng));
    const RealArray probe = random_array({2, 6}, rng);
    BiLstmCache cache;
    bilstm_encode(seq, f, bw, &cache);
    const BiLstmGrads g = bilstm_backward(cache, f, bw, probe);
    const auto loss = [&] { return probe_loss(bilstm_encode(seq, f, bw), probe); };
    std::vector<RealArray*> params;
    std::vector<RealArray> analytic;
    for (std::size_t k = 0; k < LstmCell::kParamCount; ++k) {
      params.push_back(&f.params[k]);
      analytic.push_back(g.fwd[k]);
      params.push_back(&bw.params[k]);
      analytic.push_back(g.bwd[k]);
    }
    for (std::size_t t = 0; t < steps; ++t) {
      params.push_back(&seq[t]);
      analytic.push_back(g.inputs[t]);
    }
    CHECK(grad_check(loss, params, analytic).max_error <= kGradTol);
  }
}

TEST_CASE("softmax cross-entropy values, gradient, errors") {
  const RealArray uniform = RealArray::matrix(2, 4, 0.3);
  const std::vector<int> labels = {1, 3};
  const XentResult u = softmax_xent(uniform, labels);
  CHECK(u.losses[0] == doctest::Approx(std::log(4.0)));
  CHECK(u.losses[1] == doctest::Approx(std::log(4.0)));

  const XentResult c = softmax_xent(RealArray::from_rows({{10, -10}}), std::vector<int>{0});
  CHECK(c.losses[0] == doctest::Approx(2.0611536e-9).epsilon(1e-6));
  CHECK(c.losses[0] >= 0.0);

  CHECK_THROWS_AS(softmax_xent(uniform, std::vector<int>{0, 4}), BoundsError);

  Rng rng(9);
  for (std::size_t m : {2u, 3u, 7u}) {
    RealArray logits = random_array({5, m}, rng, 3.0);
    std::vector<int> y(5);
    for (auto& v : y) v = static_cast<int>(rng.uniform_int(m));
    const RealArray probe = random_array({5}, rng);
    const XentResult r = softmax_xent(logits, y);
    RealArray analytic = r.grad;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < m; ++j) analytic(i, j) *= probe[i];
    const auto loss = [&] { return probe_loss(softmax_xent(logits, y).losses, probe); };
    RealArray* params[] = {&logits};
    const RealArray an[] = {analytic};
    CHECK(grad_check(loss, params, an).max_error <= kGradTol);
  }
}

TEST_CASE("dropout mask") {
  Rng rng(10);
  const RealArray all = dropout_mask({3, 3}, 1.0, rng);
  for (double v : all.span()) CHECK(v == 1.0);

  Rng a(42), b(42);
  CHECK(dropout_mask({4, 5}, 0.3, a) == dropout_mask({4, 5}, 0.3, b));

  Rng big(5);
  const RealArray m = dropout_mask({100000}, 0.5, big);
  double kept = 0.0;
  for (double v : m.span()) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v > 0.0 ? 1.0 : 0.0;
  }
  CHECK(std::abs(kept / 1e5 - 0.5) <= 0.01);

  CHECK_THROWS_AS(dropout_mask({2}, 0.0, rng), ParameterError);
  CHECK_THROWS_AS(dropout_mask({2}, 1.5, rng), ParameterError);
}

TEST_CASE("optimizer step semantics") {
  RealArray p = RealArray::from_rows({{1.0, -2.0}});
  {
    RealArray q = p;
    RealArray* ps[] = {&q};
    OptimizerState st(OptimizerConfig::sgd(0.9), ps);
    const RealArray g[] = {RealArray(q.shape(), 0.0)};
    st.step(ps, g, 0.1);
    CHECK(q == p);
  }
  {
    RealArray q = p;
    RealArray* ps[] = {&q};
    OptimizerState st(OptimizerConfig::sgd(0.0), ps);
    const RealArray g[] = {RealArray::from_rows({{0.5, 0.25}})};
    st.step(ps, g, 0.1);
    CHECK(q(0, 0) == doctest::Approx(1.0 - 0.05));
    CHECK(q(0, 1) == doctest::Approx(-2.0 - 0.025));
    CHECK(st.steps() == 1);
  }
  {
    RealArray q = p;
    RealArray* ps[] = {&q};
    OptimizerState st(OptimizerConfig::sgd(0.9), ps);
    const RealArray bad[] = {RealArray::vector(3)};
    CHECK_THROWS_AS(st.step(ps, bad, 0.1), DimensionError);
  }
}

TEST_CASE("momentum SGD minimizes a quadratic bowl") {
  // On f = |p|^2 with lr 0.1 and momentum 0.9 the iteration matrix has complex
  // eigenvalues of modulus sqrt(0.9), so |p_t| shrinks like 0.9^(t/2).
  Rng rng(12);
  RealArray p = random_array({6}, rng, 3.0);
  const double start = std::sqrt(p.squared_norm());
  RealArray* ps[] = {&p};
  OptimizerState st(OptimizerConfig::sgd(0.9), ps);
  auto run = [&](int steps) {
    for (int i = 0; i < steps; ++i) {
      RealArray g = p;
      for (double& v : g.span()) v *= 2.0;
      const RealArray gs[] = {g};
      st.step(ps, gs, 0.1);
    }
  };
  run(200);
  CHECK(std::sqrt(p.squared_norm()) <= 10.0 * std::pow(0.9, 100) * start);
  run(200);
  CHECK(std::sqrt(p.squared_norm()) < 1e-6);
}

TEST_CASE("adam converges on a quadratic bowl and keeps monotone step count") {
  Rng rng(13);
  RealArray p = random_array({4}, rng, 1.0);
  RealArray* ps[] = {&p};
  OptimizerState st(OptimizerConfig::adam(), ps);
  for (int i = 0; i < 3000; ++i) {
    RealArray g = p;
    for (double& v : g.span()) v *= 2.0;
    const RealArray gs[] = {g};
    st.step(ps, gs, 0.01);
  }
  CHECK(st.steps() == 3000);
  CHECK(std::sqrt(p.squared_norm()) < 1e-3);
}

TEST_CASE("grad_check: exact on linear functions, catches corrupted gradients") {
  Rng rng(14);
  RealArray x = random_array({5}, rng);
  const RealArray coef = random_array({5}, rng);
  const auto lin = [&] { return probe_loss(x, coef); };
  RealArray* params[] = {&x};
  const RealArray exact[] = {coef};
  CHECK(grad_check(lin, params, exact).max_error < 1e-9);

  RealArray w = random_array({3, 2}, rng);
  RealArray b = random_array({2}, rng);
  const RealArray in = random_array({4, 3}, rng);
  const RealArray probe = random_array({4, 2}, rng);
  DenseCache cache;
  dense_forward(in, w, b, Activation::tanh, &cache);
  LayerGrads g = dense_backward(cache, probe);
  for (double& v : g.params[0].span()) v *= 1.01;
  const auto loss = [&] { return probe_loss(dense_forward(in, w, b, Activation::tanh), probe); };
  RealArray* ps[] = {&w};
  const RealArray bad[] = {g.params[0]};
  CHECK_FALSE(grad_check(loss, ps, bad).passed(kGradTol));

  const auto nan_loss = [] { return std::nan(""); };
  CHECK_THROWS_AS(grad_check(nan_loss, ps, bad), NumericError);
}
