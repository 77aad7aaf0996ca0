#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mentor/error.hpp"
#include "mentor/netcore/grad_check.hpp"
#include "mentor/student/student.hpp"
#include "test_support.hpp"

using namespace mentor;
using namespace mentor::student;
using netcore::RealArray;
using mentor::testing::random_array;

namespace {

StudentParams zero_student(std::size_t d, std::size_t m) {
  StudentConfig cfg;
  cfg.input_dim = d;
  cfg.num_classes = m;
  Rng rng(1);
  StudentParams p = StudentParams::init(cfg, rng);
  for (RealArray* a : p.arrays()) a->fill(0.0);
  return p;
}

std::vector<int> random_labels(std::size_t b, std::size_t m, Rng& rng) {
  std::vector<int> y(b);
  for (int& v : y) v = static_cast<int>(rng.uniform_int(m));
  return y;
}

WeightedLossResult batch_gradient(const StudentParams& p, const RealArray& x, std::span<const int> y,
                                  std::span<const double> v, double theta) {
  StudentCache cache;
  const RealArray logits = student_forward(x, p, false, nullptr, &cache);
  return weighted_loss_gradient(cache, p, netcore::softmax_xent(logits, y), v, theta);
}

}  // namespace

TEST_CASE("zero network gives uniform logits and loss ln m") {
  for (std::size_t m : {2u, 4u, 10u}) {
    const StudentParams p = zero_student(3, m);
    Rng rng(2);
    const RealArray x = random_array({5, 3}, rng);
    const std::vector<int> y = random_labels(5, m, rng);
    for (double l : per_sample_losses(p, x, y)) CHECK(l == doctest::Approx(std::log(static_cast<double>(m))));
  }
}

TEST_CASE("layer shapes and eval determinism") {
  StudentConfig cfg;
  cfg.input_dim = 10;
  cfg.num_classes = 4;
  Rng rng(3);
  const StudentParams p = StudentParams::init(cfg, rng);
  REQUIRE(p.layer_count() == 3);
  CHECK(p.weights[0].shape() == std::vector<std::size_t>{10, 32});
  CHECK(p.weights[1].shape() == std::vector<std::size_t>{32, 32});
  CHECK(p.weights[2].shape() == std::vector<std::size_t>{32, 4});
  const RealArray x = random_array({7, 10}, rng);
  CHECK(student_forward(x, p, false) == student_forward(x, p, false));
  CHECK_THROWS_AS(student_forward(random_array({7, 9}, rng), p, false), DimensionError);

  cfg.num_classes = 1;
  CHECK_THROWS_AS(StudentParams::init(cfg, rng), ParameterError);
  cfg.num_classes = 3;
  cfg.theta0 = -1.0;
  CHECK_THROWS_AS(StudentParams::init(cfg, rng), ParameterError);
}

TEST_CASE("dropout only in train mode") {
  StudentConfig cfg;
  cfg.input_dim = 4;
  cfg.num_classes = 3;
  cfg.keep_prob = 0.5;
  Rng rng(4);
  const StudentParams p = StudentParams::init(cfg, rng);
  const RealArray x = random_array({6, 4}, rng);
  CHECK(student_forward(x, p, false) == student_forward(x, p, false));
  CHECK_THROWS_AS(student_forward(x, p, true), ContractError);
  Rng a(5);
  Rng b(5);
  const RealArray ta = student_forward(x, p, true, &a);
  CHECK(ta == student_forward(x, p, true, &b));
  CHECK_FALSE(ta == student_forward(x, p, false));
}

TEST_CASE("weighted loss values and contract") {
  const StudentParams p = zero_student(2, 3);
  const std::vector<double> losses = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> zeros(4, 0.0);
  const std::vector<double> ones(4, 1.0);
  CHECK(weighted_loss(losses, zeros, 0.0, p) == 0.0);
  CHECK(weighted_loss(losses, ones, 0.0, p) == doctest::Approx(2.5));
  CHECK_THROWS_AS(weighted_loss(losses, std::vector<double>{0.5, 1.2, 0.0, 0.0}, 0.0, p), ContractError);
  CHECK_THROWS_AS(weighted_loss(losses, std::vector<double>{0.5, -0.1, 0.0, 0.0}, 0.0, p), ContractError);
  CHECK_THROWS_AS(weighted_loss(losses, std::vector<double>{0.5}, 0.0, p), InputError);

  StudentConfig cfg;
  cfg.input_dim = 2;
  cfg.num_classes = 3;
  Rng rng(6);
  const StudentParams q = StudentParams::init(cfg, rng);
  CHECK(weighted_loss(losses, ones, 0.1, q) == doctest::Approx(2.5 + 0.1 * q.squared_norm()));
}

TEST_CASE("v = 0 and theta = 0 give a zero data gradient") {
  StudentConfig cfg;
  cfg.input_dim = 3;
  cfg.num_classes = 4;
  Rng rng(7);
  const StudentParams p = StudentParams::init(cfg, rng);
  const RealArray x = random_array({5, 3}, rng);
  const auto y = random_labels(5, 4, rng);
  const std::vector<double> zeros(5, 0.0);
  const WeightedLossResult r = batch_gradient(p, x, y, zeros, 0.0);
  CHECK(r.objective == 0.0);
  for (const RealArray& g : r.grads)
    for (double v : g.span()) CHECK(v == 0.0);
}

TEST_CASE("student gradient matches finite differences of the weighted objective") {
  Rng rng(8);
  struct Shape {
    std::size_t d, m, b;
    std::vector<std::size_t> hidden;
  };
  for (const Shape& s : {Shape{3, 2, 4, {5}}, Shape{4, 3, 5, {6, 4}}, Shape{2, 5, 3, {3, 3, 3}}}) {
    StudentConfig cfg;
    cfg.input_dim = s.d;
    cfg.num_classes = s.m;
    cfg.hidden = s.hidden;
    StudentParams p = StudentParams::init(cfg, rng);
    for (RealArray* a : p.arrays())
      for (double& v : a->span()) v = rng.uniform(-1.0, 1.0);
    const RealArray x = random_array({s.b, s.d}, rng);
    const auto y = random_labels(s.b, s.m, rng);
    std::vector<double> v(s.b);
    for (double& w : v) w = rng.uniform();
    const double theta = 0.05;
    const WeightedLossResult r = batch_gradient(p, x, y, v, theta);
    const auto loss = [&] { return weighted_loss(per_sample_losses(p, x, y), v, theta, p); };
    CHECK(r.objective == doctest::Approx(loss()).epsilon(1e-14));
    CHECK(netcore::grad_check(loss, p.arrays(), r.grads).max_error <= 1e-5);
  }
}

TEST_CASE("dropout gradient matches finite differences for a fixed mask") {
  StudentConfig cfg;
  cfg.input_dim = 3;
  cfg.num_classes = 3;
  cfg.hidden = {6, 5};
  cfg.keep_prob = 0.7;
  Rng rng(9);
  StudentParams p = StudentParams::init(cfg, rng);
  const RealArray x = random_array({4, 3}, rng);
  const auto y = random_labels(4, 3, rng);
  const std::vector<double> v = {1.0, 0.5, 0.25, 0.0};
  StudentCache cache;
  Rng mask_rng(10);
  const RealArray logits = student_forward(x, p, true, &mask_rng, &cache);
  const WeightedLossResult r = weighted_loss_gradient(cache, p, netcore::softmax_xent(logits, y), v, 0.0);
  const auto loss = [&] {
    Rng same(10);
    const netcore::XentResult xe = netcore::softmax_xent(student_forward(x, p, true, &same), y);
    return weighted_loss(xe.losses.span(), v, 0.0, p);
  };
  CHECK(netcore::grad_check(loss, p.arrays(), r.grads).max_error <= 1e-5);
}

TEST_CASE("one-hot weights reproduce the single-sample gradient") {
  StudentConfig cfg;
  cfg.input_dim = 4;
  cfg.num_classes = 3;
  Rng rng(11);
  const StudentParams p = StudentParams::init(cfg, rng);
  const std::size_t b = 6;
  const RealArray x = random_array({b, 4}, rng);
  const auto y = random_labels(b, 3, rng);
  const double theta = 0.02;
  for (std::size_t j = 0; j < b; ++j) {
    std::vector<double> v(b, 0.0);
    v[j] = 1.0;
    const WeightedLossResult batch = batch_gradient(p, x, y, v, theta);

    // per-sample oracle: forward sample j alone, unit weight, no decay
    RealArray xj = RealArray::matrix(1, 4);
    for (std::size_t c = 0; c < 4; ++c) xj(0, c) = x(j, c);
    const std::vector<int> yj = {y[j]};
    const std::vector<double> one = {1.0};
    const WeightedLossResult single = batch_gradient(p, xj, yj, one, 0.0);
    const auto arrays = p.arrays();
    for (std::size_t k = 0; k < arrays.size(); ++k) {
      for (std::size_t i = 0; i < arrays[k]->size(); ++i) {
        const double expect = single.grads[k][i] / static_cast<double>(b) + 2.0 * theta * (*arrays[k])[i];
        CHECK(batch.grads[k][i] == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("data gradient is linear in the weights") {
  StudentConfig cfg;
  cfg.input_dim = 3;
  cfg.num_classes = 4;
  Rng rng(12);
  const StudentParams p = StudentParams::init(cfg, rng);
  const RealArray x = random_array({8, 3}, rng);
  const auto y = random_labels(8, 4, rng);
  std::vector<double> v(8);
  for (double& w : v) w = rng.uniform();
  const WeightedLossResult base = batch_gradient(p, x, y, v, 0.0);
  for (double c : {0.25, 0.5, 1.0}) {
    std::vector<double> scaled = v;
    for (double& w : scaled) w *= c;
    const WeightedLossResult r = batch_gradient(p, x, y, scaled, 0.0);
    for (std::size_t k = 0; k < r.grads.size(); ++k)
      for (std::size_t i = 0; i < r.grads[k].size(); ++i)
        CHECK(r.grads[k][i] == doctest::Approx(c * base.grads[k][i]).epsilon(1e-12));
  }
}

TEST_CASE("per-sample losses are non-negative") {
  StudentConfig cfg;
  cfg.input_dim = 5;
  cfg.num_classes = 6;
  Rng rng(13);
  const StudentParams p = StudentParams::init(cfg, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const RealArray x = random_array({10, 5}, rng, 20.0);
    for (double l : per_sample_losses(p, x, random_labels(10, 6, rng))) CHECK(l >= 0.0);
  }
}

TEST_CASE("student serialization round-trips bit-exactly") {
  StudentConfig cfg;
  cfg.input_dim = 7;
  cfg.num_classes = 5;
  cfg.hidden = {9, 4};
  cfg.keep_prob = 0.8;
  cfg.theta0 = 1e-3;
  Rng rng(14);
  const StudentParams p = StudentParams::init(cfg, rng);
  std::stringstream buf;
  write_student(p, buf);
  const StudentParams q = read_student(buf);
  REQUIRE(q.layer_count() == p.layer_count());
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    CHECK(q.weights[l] == p.weights[l]);
    CHECK(q.biases[l] == p.biases[l]);
  }
  CHECK(q.keep_prob == p.keep_prob);
  CHECK(q.theta0 == p.theta0);

  std::stringstream wrong;
  wrong << "MNETv1";
  CHECK_THROWS(read_student(wrong));
}
