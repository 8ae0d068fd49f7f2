#pragma once

#include <random>
#include <vector>

#include "ktan/dataset.hpp"

namespace ktan::test {

inline Matrix random_orthogonal(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Matrix g(p, p);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(p, p);
}

/// Q diag(mu) Q^T with the given spectrum.
inline Matrix psd_with_spectrum(const Vector& mu, std::mt19937_64& rng) {
  const Matrix q = random_orthogonal(mu.size(), rng);
  Matrix a = q * mu.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

inline Vector random_vector(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Vector v(p);
  for (Index i = 0; i < p; ++i) v[i] = gauss(rng);
  return v;
}

/// Dense Gaussian features, labels +-1 at random.
inline Dataset toy_dataset(std::size_t n, std::size_t p, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::bernoulli_distribution coin;
  Dataset d(p);
  std::vector<double> row(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = scale * gauss(rng);
    d.add_dense_sample(row, coin(rng) ? 1 : -1);
  }
  return d;
}

}  // namespace ktan::test
