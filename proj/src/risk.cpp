#include "ktan/risk.hpp"

#include <algorithm>
#include <cmath>

namespace ktan {

namespace {

// log(1 + exp(-s)) without overflow for either sign of s.
double logistic_value(double s) {
  if (s >= 0.0) return std::log1p(std::exp(-s));
  return -s + std::log1p(std::exp(s));
}

// d/ds log(1 + exp(-s)) = -sigmoid(-s)
double logistic_derivative(double s) { return -sigmoid(-s); }

double logistic_curvature(double s) {
  const double p = sigmoid(s);
  return p * (1.0 - p);
}

// log(1 + exp(-s-ds)) - log(1 + exp(-s)) = log1p(sigmoid(-s) * expm1(-ds))
double logistic_difference(double s, double ds) {
  if (std::abs(ds) > 30.0) return logistic_value(s + ds) - logistic_value(s);
  return std::log1p(sigmoid(-s) * std::expm1(-ds));
}

constexpr MarginLoss kLogistic{logistic_value, logistic_derivative, logistic_curvature, logistic_difference, 0.25};

constexpr std::size_t kHessianChunk = 256;

}  // namespace

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

const MarginLoss& logistic_loss() { return kLogistic; }

const MarginLoss& margin_loss(LossKind kind) {
  switch (kind) {
    case LossKind::Logistic:
      return kLogistic;
  }
  throw ValidationError("unknown loss");
}

void RiskConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("regularization constant c must be positive");
}

double statistical_accuracy(Schedule schedule, std::size_t n) {
  if (n == 0) throw ValidationError("statistical accuracy needs n >= 1");
  const double nd = static_cast<double>(n);
  return schedule == Schedule::InvN ? 1.0 / nd : 1.0 / std::sqrt(nd);
}

RiskView::RiskView(const Dataset& data, std::size_t n, RiskConfig config)
    : data_(&data), n_(n), config_(config), loss_(&margin_loss(config.loss)) {
  config_.validate();
  if (n < 1) throw ValidationError("risk prefix must contain at least one sample");
  if (n > data.size()) throw ValidationError("risk prefix exceeds the dataset size");
}

double RiskView::lipschitz() const { return loss_->curvature_bound * data_->max_squared_norm(n_); }

double accuracy(const RiskView& view) { return view.accuracy(); }

double risk_value(const RiskView& view, const Vector& x) {
  if (x.size() != static_cast<Index>(view.dim())) throw ValidationError("risk_value: dimension mismatch");
  const auto& loss = view.loss();
  double sum = 0.0;
  for (std::size_t i = 0; i < view.n(); ++i) {
    const auto s = view.data().sample(i);
    sum += loss.value(s.label * s.dot(x));
  }
  const double out = sum / static_cast<double>(view.n()) + 0.5 * view.regularization() * x.squaredNorm();
  if (!std::isfinite(out)) throw NumericError("risk_value: non-finite result");
  return out;
}

Vector loss_grad_sum(const Dataset& data, const RiskConfig& config, const Vector& x, std::size_t begin,
                     std::size_t end) {
  if (x.size() != static_cast<Index>(data.dim())) throw ValidationError("loss_grad_sum: dimension mismatch");
  if (begin > end || end > data.size()) throw ValidationError("loss_grad_sum: invalid sample range");
  const auto& loss = margin_loss(config.loss);
  Vector g = Vector::Zero(x.size());
  for (std::size_t i = begin; i < end; ++i) {
    const auto s = data.sample(i);
    s.axpy(s.label * loss.derivative(s.label * s.dot(x)), g);
  }
  return g;
}

Vector risk_grad_from_sum(const RiskView& view, const Vector& x, const Vector& loss_sum) {
  Vector g = loss_sum / static_cast<double>(view.n()) + view.regularization() * x;
  if (!g.allFinite()) throw NumericError("risk_grad: non-finite gradient");
  return g;
}

Vector risk_grad(const RiskView& view, const Vector& x, WorkMeter* meter) {
  Vector g = risk_grad_from_sum(view, x, loss_grad_sum(view.data(), view.config(), x, 0, view.n()));
  if (meter) meter->charge(view.n());
  return g;
}

Matrix data_hessian(const RiskView& view, const Vector& x, Index cap) {
  const Index p = static_cast<Index>(view.dim());
  if (p > cap) throw CapabilityError("data_hessian: dimension exceeds the dense cap; use data_hessian_vec");
  if (x.size() != p) throw ValidationError("data_hessian: dimension mismatch");

  const auto& loss = view.loss();
  const double inv_n = 1.0 / static_cast<double>(view.n());
  Matrix h = Matrix::Zero(p, p);
  // Chunks of sqrt(w_i) a_i^T, accumulated as a rank update on the lower triangle.
  Matrix chunk(static_cast<Index>(std::min(kHessianChunk, view.n())), p);
  for (std::size_t start = 0; start < view.n(); start += kHessianChunk) {
    const std::size_t stop = std::min(view.n(), start + kHessianChunk);
    const Index rows = static_cast<Index>(stop - start);
    chunk.topRows(rows).setZero();
    for (std::size_t i = start; i < stop; ++i) {
      const auto s = view.data().sample(i);
      const double w = std::sqrt(loss.curvature(s.label * s.dot(x)) * inv_n);
      for (std::size_t j = 0; j < s.indices.size(); ++j)
        chunk(static_cast<Index>(i - start), s.indices[j]) = w * s.values[j];
    }
    h.selfadjointView<Eigen::Lower>().rankUpdate(chunk.topRows(rows).transpose());
  }
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  if (!h.allFinite()) throw NumericError("data_hessian: non-finite entries");
  return h;
}

HessianOperator::HessianOperator(const RiskView& view, const Vector& x) : view_(view), weights_(view.n()) {
  if (x.size() != static_cast<Index>(view.dim())) throw ValidationError("HessianOperator: dimension mismatch");
  const auto& loss = view.loss();
  const double inv_n = 1.0 / static_cast<double>(view.n());
  for (std::size_t i = 0; i < view.n(); ++i) {
    const auto s = view.data().sample(i);
    weights_[i] = loss.curvature(s.label * s.dot(x)) * inv_n;
  }
}

Vector HessianOperator::apply(const Vector& v) const {
  if (v.size() != dim()) throw ValidationError("data_hessian_vec: dimension mismatch");
  Vector out = Vector::Zero(dim());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const auto s = view_.data().sample(i);
    s.axpy(weights_[i] * s.dot(v), out);
  }
  return out;
}

Matrix HessianOperator::apply(const Matrix& block) const {
  if (block.rows() != dim()) throw ValidationError("HessianOperator: block has the wrong row count");
  const Index b = block.cols();
  Matrix out = Matrix::Zero(dim(), b);
  Eigen::RowVectorXd proj(b);
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const auto s = view_.data().sample(i);
    proj.setZero();
    for (std::size_t j = 0; j < s.indices.size(); ++j) proj.noalias() += s.values[j] * block.row(s.indices[j]);
    proj *= weights_[i];
    for (std::size_t j = 0; j < s.indices.size(); ++j) out.row(s.indices[j]).noalias() += s.values[j] * proj;
  }
  return out;
}

Vector data_hessian_vec(const RiskView& view, const Vector& x, const Vector& v) {
  if (v.size() != static_cast<Index>(view.dim())) throw ValidationError("data_hessian_vec: dimension mismatch");
  return HessianOperator(view, x).apply(v);
}

}  // namespace ktan
