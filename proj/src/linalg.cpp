#include "ktan/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

namespace ktan {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

Matrix orthonormalize(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// Eigen returns ascending order; everything here is non-increasing.
SymEigPair descending(const Eigen::SelfAdjointEigenSolver<Matrix>& es) {
  const Index p = es.eigenvalues().size();
  SymEigPair out{Matrix(p, p), Vector(p)};
  for (Index i = 0; i < p; ++i) {
    out.eigvals[i] = es.eigenvalues()[p - 1 - i];
    out.eigvecs.col(i) = es.eigenvectors().col(p - 1 - i);
  }
  return out;
}

}  // namespace

SymEigPair full_sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("full_sym_eig: matrix is not square");
  if (a.rows() < 1) throw ValidationError("full_sym_eig: empty matrix");
  if (!a.allFinite()) throw ValidationError("full_sym_eig: non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError("full_sym_eig: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw NumericError("full_sym_eig: eigensolver did not converge");
  return descending(es);
}

Index select_rank(const Vector& eigvals, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError("select_rank: threshold must be non-negative");
  for (Index i = 1; i < eigvals.size(); ++i)
    if (eigvals[i] > eigvals[i - 1]) throw ValidationError("select_rank: eigenvalues are not sorted non-increasing");
  for (Index i = 0; i < eigvals.size(); ++i) {
    // threshold 0 means "keep everything strictly positive"
    if (threshold > 0.0 ? eigvals[i] <= threshold : eigvals[i] <= 0.0) return i;
  }
  return eigvals.size();
}

TruncatedEig truncate(const SymEigPair& eig, double threshold) {
  const Index k = select_rank(eig.eigvals, threshold);
  TruncatedEig out;
  out.basis = eig.eigvecs.leftCols(k);
  out.eigvals = eig.eigvals.head(k);
  out.next_eig = (k < eig.eigvals.size()) ? std::max(0.0, eig.eigvals[k]) : 0.0;
  return out;
}

TruncatedEig randomized_truncated_eig(const BlockOperator& op, Index dim, double threshold,
                                      const RandomizedEigParams& params) {
  if (dim < 1) throw ValidationError("randomized_truncated_eig: dimension must be positive");
  if (!(threshold >= 0.0)) throw ValidationError("randomized_truncated_eig: threshold must be non-negative");
  if (params.block0 < 1 || params.oversample < 0 || params.power_iters < 0)
    throw ValidationError("randomized_truncated_eig: invalid block parameters");

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss;

  auto apply = [&](const Matrix& v) {
    Matrix av = op(v);
    if (av.rows() != dim || av.cols() != v.cols()) throw ValidationError("operator returned a block of the wrong shape");
    require_finite(av, "operator output");
    return av;
  };

  Index block = std::min(params.block0, dim);
  // threshold 0 can only be certified by the full spectrum
  while (threshold > 0.0 && block + params.oversample < dim) {
    const Index width = block + params.oversample;
    Matrix omega(dim, width);
    for (Index j = 0; j < width; ++j)
      for (Index i = 0; i < dim; ++i) omega(i, j) = gauss(rng);

    Matrix q = orthonormalize(apply(omega));
    for (int it = 0; it < params.power_iters; ++it) q = orthonormalize(apply(q));

    Matrix b = q.transpose() * apply(q);
    b = 0.5 * (b + b.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    if (es.info() != Eigen::Success) throw NumericError("randomized_truncated_eig: Ritz problem did not converge");
    const SymEigPair ritz = descending(es);

    const Index k = select_rank(ritz.eigvals, threshold);
    if (k < block) {
      TruncatedEig out;
      out.basis = q * ritz.eigvecs.leftCols(k);
      out.eigvals = ritz.eigvals.head(k);
      out.next_eig = std::max(0.0, ritz.eigvals[k]);
      return out;
    }
    block *= 2;
  }

  // The block covers the space: materialize the operator and decompose it exactly.
  Matrix dense = apply(Matrix::Identity(dim, dim));
  dense = 0.5 * (dense + dense.transpose());
  return truncate(full_sym_eig(dense), threshold);
}

TruncatedInverse::TruncatedInverse(TruncatedEig factors, double regularizer)
    : factors_(std::move(factors)), regularizer_(regularizer) {
  if (!(regularizer_ > 0.0) || !std::isfinite(regularizer_))
    throw ValidationError("TruncatedInverse: regularizer must be positive");
  if (factors_.basis.cols() != factors_.eigvals.size())
    throw ValidationError("TruncatedInverse: basis/eigenvalue count mismatch");
  inner_scale_ = (factors_.eigvals.array() + regularizer_).inverse() - 1.0 / regularizer_;
}

Vector TruncatedInverse::apply(const Vector& g) const {
  if (g.size() != dim()) throw ValidationError("apply_inverse: dimension mismatch");
  Vector out = g / regularizer_;
  if (factors_.rank() > 0) {
    const Vector proj = factors_.basis.transpose() * g;
    out.noalias() += factors_.basis * inner_scale_.cwiseProduct(proj);
  }
  return out;
}

Vector TruncatedInverse::forward(const Vector& v) const {
  if (v.size() != dim()) throw ValidationError("TruncatedInverse::forward: dimension mismatch");
  Vector out = regularizer_ * v;
  if (factors_.rank() > 0) {
    const Vector proj = factors_.basis.transpose() * v;
    out.noalias() += factors_.basis * factors_.eigvals.cwiseProduct(proj);
  }
  return out;
}

Vector apply_inverse(const TruncatedInverse& inv, const Vector& g) { return inv.apply(g); }

double truncation_epsilon(const TruncatedEig& factors, double regularizer) {
  if (!(regularizer > 0.0)) throw ValidationError("truncation_epsilon: regularizer must be positive");
  if (factors.rank() == factors.dim()) return 0.0;
  return factors.next_eig / regularizer;
}

}  // namespace ktan
