#include <doctest.h>

#include <cmath>

#include "ktan/linalg.hpp"
#include "ktan/risk.hpp"
#include "support.hpp"

using namespace ktan;
using ktan::test::random_vector;
using ktan::test::toy_dataset;

namespace {

// Plain scalar re-evaluation of the objective, independent of the library path.
double scalar_risk(const Dataset& d, std::size_t n, double reg, const Vector& x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = d.sample(i);
    double margin = 0.0;
    for (std::size_t j = 0; j < s.indices.size(); ++j) margin += s.values[j] * x[s.indices[j]];
    sum += std::log(1.0 + std::exp(-s.label * margin));
  }
  return sum / static_cast<double>(n) + 0.5 * reg * x.squaredNorm();
}

Dataset four_samples() {
  Dataset d(2);
  const double rows[4][2] = {{1.0, 0.5}, {-0.3, 2.0}, {0.7, -1.1}, {0.0, 0.4}};
  const int labels[4] = {1, -1, 1, -1};
  for (int i = 0; i < 4; ++i) d.add_dense_sample(rows[i], labels[i]);
  return d;
}

}  // namespace

TEST_CASE("statistical accuracy schedules") {
  CHECK(statistical_accuracy(Schedule::InvN, 6000) == doctest::Approx(1.0 / 6000.0));
  CHECK(statistical_accuracy(Schedule::InvSqrtN, 100) == doctest::Approx(0.1));
  CHECK(statistical_accuracy(Schedule::InvN, 1) == 1.0);
  CHECK_THROWS_AS(statistical_accuracy(Schedule::InvN, 0), ValidationError);
  for (std::size_t n = 1; n < 100; ++n) {
    CHECK(statistical_accuracy(Schedule::InvN, n + 1) < statistical_accuracy(Schedule::InvN, n));
    CHECK(statistical_accuracy(Schedule::InvSqrtN, n + 1) < statistical_accuracy(Schedule::InvSqrtN, n));
  }
}

TEST_CASE("risk views validate their prefix and constant") {
  const Dataset d = toy_dataset(5, 3, 1);
  CHECK_THROWS_AS(RiskView(d, 0, {}), ValidationError);
  CHECK_THROWS_AS(RiskView(d, 6, {}), ValidationError);
  CHECK_THROWS_AS(RiskView(d, 3, {.c = 0.0}), ValidationError);
  CHECK(RiskView(d, 5, {.c = 2.0}).regularization() == doctest::Approx(0.4));
}

TEST_CASE("risk value at the origin is log 2") {
  const Dataset d = toy_dataset(20, 4, 2);
  for (double c : {0.5, 1.0, 64.0})
    CHECK(risk_value(RiskView(d, 20, {.c = c}), Vector::Zero(4)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Dataset one(2);
  const double a[2] = {1.0, 0.0};
  one.add_dense_sample(a, 1);
  CHECK(risk_value(RiskView(one, 1, {}), Vector::Zero(2)) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("risk value matches a scalar evaluation") {
  const Dataset d = four_samples();
  Vector x(2);
  x << 0.3, -0.2;
  const RiskView view(d, 4, {.c = 1.5});
  CHECK(std::abs(risk_value(view, x) - scalar_risk(d, 4, view.regularization(), x)) < 1e-12);
}

TEST_CASE("risk value is stable for large margins") {
  const Dataset d = four_samples();
  Vector x(2);
  x << 800.0, -900.0;
  const double v = risk_value(RiskView(d, 4, {}), x);
  CHECK(std::isfinite(v));
  CHECK(std::isfinite(risk_grad(RiskView(d, 4, {}), x).norm()));
}

TEST_CASE("gradient at the origin") {
  const Dataset d = toy_dataset(7, 3, 4);
  Vector expect = Vector::Zero(3);
  for (std::size_t i = 0; i < 7; ++i) d.sample(i).axpy(-0.5 * d.sample(i).label / 7.0, expect);
  CHECK((risk_grad(RiskView(d, 7, {}), Vector::Zero(3)) - expect).norm() < 1e-15);
}

TEST_CASE("gradient meter charges n per evaluation") {
  const Dataset d = toy_dataset(9, 3, 4);
  WorkMeter meter;
  risk_grad(RiskView(d, 9, {}), Vector::Zero(3), &meter);
  risk_grad(RiskView(d, 4, {}), Vector::Zero(3), &meter);
  CHECK(meter.samples.load() == 13);
  CHECK(meter.calls.load() == 2);
}

TEST_CASE("gradient and Hessian match finite differences") {
  const double h = 1e-6;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Dataset d = toy_dataset(30, 5, seed);
    const RiskView view(d, 30, {.c = 2.0});
    std::mt19937_64 rng(seed);
    const Vector x = 0.5 * random_vector(5, rng);
    const Vector g = risk_grad(view, x);
    Vector fd(5);
    Matrix hfd(5, 5);
    for (Index j = 0; j < 5; ++j) {
      Vector e = Vector::Zero(5);
      e[j] = h;
      fd[j] = (risk_value(view, x + e) - risk_value(view, x - e)) / (2 * h);
      hfd.col(j) = (risk_grad(view, x + e) - risk_grad(view, x - e)) / (2 * h);
    }
    hfd.diagonal().array() -= view.regularization();
    CHECK((fd - g).norm() <= 1e-5 * g.norm());
    const Matrix hess = data_hessian(view, x);
    CHECK((hfd - hess).norm() <= 1e-5 * hess.norm());
  }
}

TEST_CASE("data Hessian special cases") {
  const Dataset d = toy_dataset(12, 4, 8);
  const RiskView view(d, 12, {});
  Matrix expect = Matrix::Zero(4, 4);
  for (std::size_t i = 0; i < 12; ++i) {
    const Vector a = d.to_dense(12).row(static_cast<Index>(i)).transpose();
    expect += a * a.transpose() / (4.0 * 12.0);
  }
  CHECK((data_hessian(view, Vector::Zero(4)) - expect).norm() < 1e-14);

  Dataset one(3);
  const double e1[3] = {1.0, 0.0, 0.0};
  one.add_dense_sample(e1, -1);
  Matrix quarter = Matrix::Zero(3, 3);
  quarter(0, 0) = 0.25;
  CHECK((data_hessian(RiskView(one, 1, {}), Vector::Zero(3)) - quarter).norm() < 1e-16);

  CHECK_THROWS_AS(data_hessian(view, Vector::Zero(4), 3), CapabilityError);
}

TEST_CASE("Hessian-vector products agree with the dense Hessian") {
  const Dataset d = toy_dataset(200, 50, 12);
  const RiskView view(d, 200, {});
  std::mt19937_64 rng(2);
  const Vector x = 0.2 * random_vector(50, rng);
  const Matrix hess = data_hessian(view, x);
  for (int t = 0; t < 5; ++t) {
    const Vector v = random_vector(50, rng);
    CHECK((data_hessian_vec(view, x, v) - hess * v).norm() <= 1e-10 * (hess * v).norm());
  }
  CHECK(data_hessian_vec(view, x, Vector::Zero(50)).norm() == 0.0);
  const Matrix block = Matrix::Random(50, 7);
  CHECK((HessianOperator(view, x).apply(block) - hess * block).norm() <= 1e-10 * (hess * block).norm());
  CHECK_THROWS_AS(data_hessian_vec(view, x, Vector::Zero(3)), ValidationError);
}

TEST_CASE("rank-one Hessian action for a single sample") {
  Dataset one(3);
  const double a[3] = {0.5, -1.0, 2.0};
  one.add_dense_sample(a, 1);
  const RiskView view(one, 1, {});
  Vector x(3), v(3), av(3);
  x << 0.1, 0.2, -0.3;
  v << 1.0, 2.0, 3.0;
  av << 0.5, -1.0, 2.0;
  const double s = av.dot(x);
  const double w = sigmoid(s) * (1.0 - sigmoid(s));
  CHECK((data_hessian_vec(view, x, v) - w * av * av.dot(v)).norm() < 1e-15);
}

TEST_CASE("strong convexity and gradient Lipschitz witnesses") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = toy_dataset(40, 6, seed);
    const RiskView view(d, 40, {.c = 3.0});
    const double mu = view.regularization();
    const double lip = view.lipschitz() + mu;
    std::mt19937_64 rng(seed + 100);
    for (int t = 0; t < 10; ++t) {
      const Vector x = random_vector(6, rng);
      const Vector y = random_vector(6, rng);
      const double lower = risk_value(view, x) + risk_grad(view, x).dot(y - x) + 0.5 * mu * (y - x).squaredNorm();
      CHECK(risk_value(view, y) >= lower - 1e-12);
      CHECK((risk_grad(view, x) - risk_grad(view, y)).norm() <= lip * (x - y).norm() + 1e-12);
    }
  }
}

TEST_CASE("prefix extension of gradient sums matches a cold evaluation") {
  const Dataset d = toy_dataset(100, 5, 21);
  const RiskConfig cfg{.c = 1.0};
  std::mt19937_64 rng(4);
  const Vector x = random_vector(5, rng);
  const Vector head = loss_grad_sum(d, cfg, x, 0, 37);
  const Vector tail = loss_grad_sum(d, cfg, x, 37, 100);
  const RiskView view(d, 100, cfg);
  CHECK((risk_grad_from_sum(view, x, head + tail) - risk_grad(view, x)).norm() < 1e-12);
  CHECK_THROWS_AS(loss_grad_sum(d, cfg, x, 50, 20), ValidationError);
}

TEST_CASE("data Hessian is symmetric positive semidefinite") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = toy_dataset(15, 20, seed);  // n < p, so singular
    const RiskView view(d, 15, {});
    std::mt19937_64 rng(seed);
    const Matrix h = data_hessian(view, random_vector(20, rng));
    CHECK((h - h.transpose()).norm() == 0.0);
    CHECK(full_sym_eig(h).eigvals.minCoeff() >= -1e-10);
  }
}

TEST_CASE("Lipschitz constant is a quarter of the largest squared row norm") {
  Dataset d(2);
  const double a[2] = {3.0, 4.0}, b[2] = {1.0, 0.0};
  d.add_dense_sample(b, 1);
  d.add_dense_sample(a, -1);
  CHECK(RiskView(d, 1, {}).lipschitz() == doctest::Approx(0.25));
  CHECK(RiskView(d, 2, {}).lipschitz() == doctest::Approx(6.25));
}

TEST_CASE("loss difference is accurate for small steps") {
  const auto& loss = logistic_loss();
  for (double s : {-30.0, -2.0, 0.0, 1.5, 40.0}) {
    for (double ds : {1e-9, -3e-7, 0.1, -2.0}) {
      const double expect = std::abs(ds) < 1e-6
                                ? loss.derivative(s) * ds + 0.5 * loss.curvature(s) * ds * ds
                                : loss.value(s + ds) - loss.value(s);
      CHECK(loss.difference(s, ds) == doctest::Approx(expect).epsilon(1e-6));
    }
  }
}
