#include <doctest.h>

#include <cmath>

#include "ktan/linalg.hpp"
#include "support.hpp"

using namespace ktan;
using ktan::test::psd_with_spectrum;
using ktan::test::random_vector;

namespace {

TruncatedEig leading(const SymEigPair& eig, Index k) {
  TruncatedEig t;
  t.basis = eig.eigvecs.leftCols(k);
  t.eigvals = eig.eigvals.head(k);
  t.next_eig = k < eig.eigvals.size() ? std::max(0.0, eig.eigvals[k]) : 0.0;
  return t;
}

Vector spectrum(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("full_sym_eig on diagonal and identity matrices") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 1.0, 3.0, 0.0;
  const auto eig = full_sym_eig(d);
  CHECK(eig.eigvals[0] == doctest::Approx(3.0));
  CHECK(eig.eigvals[1] == doctest::Approx(1.0));
  CHECK(std::abs(eig.eigvals[2]) < 1e-15);
  Matrix abs_u = eig.eigvecs.cwiseAbs();
  CHECK(abs_u(1, 0) == doctest::Approx(1.0));
  CHECK(abs_u(0, 1) == doctest::Approx(1.0));
  CHECK(abs_u(2, 2) == doctest::Approx(1.0));

  const auto id = full_sym_eig(Matrix::Identity(4, 4));
  CHECK((id.eigvals.array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("full_sym_eig reconstructs random SPD matrices") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Vector mu = random_vector(8, rng).cwiseAbs();
    const Matrix a = psd_with_spectrum(mu, rng);
    const auto eig = full_sym_eig(a);
    const Matrix back = eig.eigvecs * eig.eigvals.asDiagonal() * eig.eigvecs.transpose();
    CHECK((back - a).norm() <= 1e-8);
    for (Index i = 1; i < 8; ++i) CHECK(eig.eigvals[i - 1] >= eig.eigvals[i]);
  }
}

TEST_CASE("full_sym_eig rejects bad input") {
  Matrix a = Matrix::Identity(3, 3);
  a(0, 1) = 1e-3;
  CHECK_THROWS_AS(full_sym_eig(a), ValidationError);
  Matrix b = Matrix::Identity(3, 3);
  b(2, 2) = std::nan("");
  CHECK_THROWS_AS(full_sym_eig(b), ValidationError);
  CHECK_THROWS_AS(full_sym_eig(Matrix(2, 3)), ValidationError);
}

TEST_CASE("select_rank") {
  CHECK(select_rank(spectrum({5, 1, 0.01, 0.001}), 0.05) == 2);
  CHECK(select_rank(spectrum({0.04}), 0.05) == 0);
  CHECK(select_rank(spectrum({0.05, 0.01}), 0.05) == 0);  // equality truncates
  CHECK(select_rank(spectrum({2, 1}), 0.5) == 2);
  CHECK(select_rank(spectrum({2, 1, 0}), 0.0) == 2);
  CHECK_THROWS_AS(select_rank(spectrum({1, 2}), 0.5), ValidationError);
  CHECK_THROWS_AS(select_rank(spectrum({2, 1}), -1.0), ValidationError);
}

TEST_CASE("select_rank is non-increasing in the threshold") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Vector mu = random_vector(12, rng).cwiseAbs();
    std::sort(mu.data(), mu.data() + mu.size(), std::greater<>());
    Index prev = mu.size();
    for (double tau = 0.0; tau < 3.0; tau += 0.05) {
      const Index k = select_rank(mu, tau);
      CHECK(k <= prev);
      prev = k;
    }
  }
}

TEST_CASE("apply_inverse diagonal example") {
  TruncatedEig f;
  f.basis = Matrix::Zero(3, 1);
  f.basis(0, 0) = 1.0;
  f.eigvals = spectrum({2.0});
  f.next_eig = 1.0;
  const TruncatedInverse inv(f, 0.5);
  const Vector out = apply_inverse(inv, Vector::Ones(3));
  CHECK(out[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(out[2] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(apply_inverse(inv, Vector::Ones(4)), ValidationError);
  CHECK_THROWS_AS(TruncatedInverse(f, 0.0), ValidationError);
}

TEST_CASE("apply_inverse with every eigenpair equals a dense solve") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 6 + trial % 10;
    Vector mu = random_vector(p, rng).cwiseAbs();
    const Matrix l = psd_with_spectrum(mu, rng);
    const double r = 0.1 + 0.05 * trial;
    const auto eig = full_sym_eig(l);
    const TruncatedInverse inv(leading(eig, p), r);
    const Vector g = random_vector(p, rng);
    const Vector dense = (l + r * Matrix::Identity(p, p)).ldlt().solve(g);
    CHECK((apply_inverse(inv, g) - dense).norm() <= 1e-10 * dense.norm());
  }
}

TEST_CASE("apply_inverse matches the materialized truncated inverse") {
  std::mt19937_64 rng(9);
  Vector mu = random_vector(5, rng).cwiseAbs();
  const Matrix l = psd_with_spectrum(mu, rng);
  const auto f = leading(full_sym_eig(l), 2);
  const double r = 0.1;
  const Matrix approx = f.basis * f.eigvals.asDiagonal() * f.basis.transpose() + r * Matrix::Identity(5, 5);
  const Vector g = random_vector(5, rng);
  const Vector dense = approx.inverse() * g;
  CHECK((apply_inverse(TruncatedInverse(f, r), g) - dense).norm() <= 1e-10 * dense.norm());
}

TEST_CASE("forward then inverse is the identity") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 10;
    const Matrix l = psd_with_spectrum(random_vector(p, rng).cwiseAbs(), rng);
    const TruncatedInverse inv(leading(full_sym_eig(l), trial % (p + 1)), 0.3);
    const Vector v = random_vector(p, rng);
    CHECK((inv.apply(inv.forward(v)) - v).norm() <= 1e-9 * v.norm());
  }
}

TEST_CASE("truncation_epsilon") {
  TruncatedEig f;
  f.basis = Matrix::Zero(4, 1);
  f.eigvals = spectrum({1.0});
  f.next_eig = 0.02;
  CHECK(truncation_epsilon(f, 0.1) == doctest::Approx(0.2));
  TruncatedEig full;
  full.basis = Matrix::Identity(2, 2);
  full.eigvals = spectrum({1.0, 0.5});
  CHECK(truncation_epsilon(full, 0.1) == 0.0);
  CHECK_THROWS_AS(truncation_epsilon(f, 0.0), ValidationError);
}

TEST_CASE("truncated step error bound holds and is tight on the first dropped eigenvector") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 5 + trial;
    const Matrix l = psd_with_spectrum(random_vector(p, rng).cwiseAbs(), rng);
    const double r = 0.05 + 0.1 * (trial % 5);
    const Matrix h = l + r * Matrix::Identity(p, p);
    const auto eig = full_sym_eig(l);
    for (Index k = 0; k <= p; ++k) {
      const auto f = leading(eig, k);
      const TruncatedInverse inv(f, r);
      const double eps = truncation_epsilon(f, r);
      for (int probe = 0; probe < 3; ++probe) {
        const Vector g = random_vector(p, rng);
        const Vector exact = h.ldlt().solve(g);
        CHECK((inv.apply(g) - exact).norm() <= eps * exact.norm() + 1e-9);
      }
      if (k < p) {
        const Vector v = eig.eigvecs.col(k);
        const Vector exact = h.ldlt().solve(v);
        CHECK((inv.apply(v) - exact).norm() / exact.norm() == doctest::Approx(eps).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("randomized eigensolver examples") {
  Matrix d = Matrix::Zero(4, 4);
  d.diagonal() << 5, 1, 0.01, 0.001;
  BlockOperator op = [&](const Matrix& v) { return Matrix(d * v); };
  auto f = randomized_truncated_eig(op, 4, 0.05);
  REQUIRE(f.rank() == 2);
  CHECK(std::abs(f.eigvals[0] - 5.0) < 1e-6);
  CHECK(std::abs(f.eigvals[1] - 1.0) < 1e-6);

  BlockOperator zero = [](const Matrix& v) { return Matrix(Matrix::Zero(v.rows(), v.cols())); };
  const auto z = randomized_truncated_eig(zero, 30, 0.1);
  CHECK(z.rank() == 0);
  CHECK(z.next_eig == 0.0);

  std::mt19937_64 rng(31);
  Vector mu = Vector::Zero(50);
  mu.head(3) << 4.0, 2.0, 0.5;
  const Matrix low = psd_with_spectrum(mu, rng);
  BlockOperator lop = [&](const Matrix& v) { return Matrix(low * v); };
  const auto lr = randomized_truncated_eig(lop, 50, 0.1, {.seed = 3});
  REQUIRE(lr.rank() == 3);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(lr.eigvals[i] - mu[i]) <= 1e-6 * mu[i]);

  BlockOperator bad = [](const Matrix& v) { return Matrix(Matrix::Constant(v.rows(), v.cols(), std::nan(""))); };
  CHECK_THROWS_AS(randomized_truncated_eig(bad, 30, 0.1), NumericError);
}

TEST_CASE("randomized Ritz values do not exceed dense eigenvalues") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const Index p = 40 + 20 * trial;
    Vector mu(p);
    for (Index i = 0; i < p; ++i) mu[i] = std::pow(0.7, static_cast<double>(i));
    const Matrix a = psd_with_spectrum(mu, rng);
    BlockOperator op = [&](const Matrix& v) { return Matrix(a * v); };
    const double tau = 0.01;
    const auto f = randomized_truncated_eig(op, p, tau, {.seed = static_cast<std::uint64_t>(trial)});
    const auto dense = full_sym_eig(a);
    CHECK(f.rank() == select_rank(dense.eigvals, tau));
    for (Index i = 0; i < f.rank(); ++i) CHECK(f.eigvals[i] <= dense.eigvals[i] * (1.0 + 1e-6));
    CHECK((f.basis.transpose() * f.basis - Matrix::Identity(f.rank(), f.rank())).norm() < 1e-10);
  }
}

TEST_CASE("randomized eigensolver is deterministic for a fixed seed") {
  std::mt19937_64 rng(43);
  Vector mu(60);
  for (Index i = 0; i < 60; ++i) mu[i] = 1.0 / (1.0 + i);
  const Matrix a = psd_with_spectrum(mu, rng);
  BlockOperator op = [&](const Matrix& v) { return Matrix(a * v); };
  const auto f1 = randomized_truncated_eig(op, 60, 0.1, {.seed = 9});
  const auto f2 = randomized_truncated_eig(op, 60, 0.1, {.seed = 9});
  CHECK(f1.eigvals == f2.eigvals);
  CHECK(f1.basis == f2.basis);
}
