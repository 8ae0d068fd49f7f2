#pragma once

#include "ktan/common.hpp"

#include <cstdint>
#include <functional>

namespace ktan {

/// Full symmetric eigendecomposition A = U diag(mu) U^T, eigenvalues non-increasing.
struct SymEigPair {
  Matrix eigvecs;
  Vector eigvals;
};

/// Rank-k spectral factors U_k, Sigma_k of a PSD operator plus an estimate
/// of the first discarded eigenvalue mu_{k+1} (0 when k == p).
struct TruncatedEig {
  Matrix basis;     // p x k, orthonormal columns
  Vector eigvals;   // k values, strictly positive, non-increasing
  double next_eig = 0.0;

  Index rank() const { return eigvals.size(); }
  Index dim() const { return basis.rows(); }
};

/// The operator (U_k Sigma_k U_k^T + r I)^{-1}, applied in O(pk) without forming a p x p matrix.
class TruncatedInverse {
 public:
  TruncatedInverse(TruncatedEig factors, double regularizer);

  const TruncatedEig& factors() const { return factors_; }
  double regularizer() const { return regularizer_; }
  Index dim() const { return factors_.dim(); }

  Vector apply(const Vector& g) const;
  /// (U_k Sigma_k U_k^T + r I) v
  Vector forward(const Vector& v) const;

 private:
  TruncatedEig factors_;
  double regularizer_;
  Vector inner_scale_;  // 1/(sigma_i + r) - 1/r
};

SymEigPair full_sym_eig(const Matrix& a);

/// Smallest k with eigvals[k] <= threshold (0-indexed), else p.
///
/// A zero threshold keeps every strictly positive eigenvalue, which is how
/// rho = 0 (no truncation) is expressed.
Index select_rank(const Vector& eigvals, double threshold);

/// Keeps the leading select_rank(eigvals, threshold) pairs of a dense decomposition.
TruncatedEig truncate(const SymEigPair& eig, double threshold);

struct RandomizedEigParams {
  Index block0 = 16;
  Index oversample = 10;
  int power_iters = 2;
  std::uint64_t seed = 0;
};

/// Block action V -> A V of a symmetric PSD operator on p x b blocks.
using BlockOperator = std::function<Matrix(const Matrix&)>;

/// Randomized range finder with subspace iteration followed by Rayleigh-Ritz.
///
/// The block grows by doubling until the (k+1)-th Ritz value falls at or
/// below the threshold inside the non-oversampled part of the block. Once
/// the block would cover the whole space the operator is materialized and
/// decomposed densely.
TruncatedEig randomized_truncated_eig(const BlockOperator& op, Index dim, double threshold,
                                      const RandomizedEigParams& params = {});

Vector apply_inverse(const TruncatedInverse& inv, const Vector& g);

/// epsilon_n = mu_{k+1} / r.
double truncation_epsilon(const TruncatedEig& factors, double regularizer);

}  // namespace ktan
