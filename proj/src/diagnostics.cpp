#include "ktan/diagnostics.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace ktan {

namespace {

// Conjugate gradients on (grad^2 L_n + c V_n I) d = g using matrix-free products.
Vector cg_solve(const HessianOperator& hessian, double reg, const Vector& g) {
  const double tol = 1e-10 * g.norm();
  Vector d = Vector::Zero(g.size());
  if (g.norm() == 0.0) return d;
  Vector r = g;
  Vector p = r;
  double rr = r.squaredNorm();
  const Index max_iters = 10 * g.size() + 100;
  double best = std::sqrt(rr);
  Index since_best = 0;
  for (Index it = 0; it < max_iters; ++it) {
    const Vector hp = hessian.apply(p) + reg * p;
    const double curvature = p.dot(hp);
    if (!(curvature > 0.0)) throw NumericError("newton_decrement: CG met non-positive curvature");
    const double step = rr / curvature;
    d += step * p;
    r -= step * hp;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= tol) return d;
    if (std::sqrt(rr_new) < best) {
      best = std::sqrt(rr_new);
      since_best = 0;
    } else if (++since_best > 50) {
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  throw NumericError("newton_decrement: CG stagnated before reaching 1e-10 relative residual");
}

}  // namespace

double newton_decrement(const RiskView& view, const Vector& x, Index cap) {
  const Vector g = risk_grad(view, x);
  const double reg = view.regularization();
  Vector d;
  if (static_cast<Index>(view.dim()) <= cap) {
    Matrix h = data_hessian(view, x, cap);
    h.diagonal().array() += reg;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) throw NumericError("newton_decrement: Hessian is not positive definite");
    d = llt.solve(g);
  } else {
    d = cg_solve(HessianOperator(view, x), reg, g);
  }
  return std::sqrt(std::max(0.0, g.dot(d)));
}

double stage_subopt(const RiskView& view, const Vector& x, const Vector& xstar) {
  if (x.size() != static_cast<Index>(view.dim()) || xstar.size() != x.size())
    throw ValidationError("stage_subopt: dimension mismatch");
  const auto& loss = view.loss();
  const Vector diff = x - xstar;
  double sum = 0.0;
  for (std::size_t i = 0; i < view.n(); ++i) {
    const auto s = view.data().sample(i);
    sum += loss.difference(s.label * s.dot(xstar), s.label * s.dot(diff));
  }
  const double out =
      sum / static_cast<double>(view.n()) + 0.5 * view.regularization() * diff.dot(x + xstar);
  if (out < -1e-12) throw NumericError("stage_subopt: negative suboptimality; the reference point is not a minimizer");
  return out;
}

double carry_constant(double c, double xstar_norm, double alpha) {
  return 3.0 + (2.0 + 0.5 * c * xstar_norm * xstar_norm) * (1.0 - 1.0 / alpha);
}

double condition1_lhs(double m, double n, double vm, double vn, double c, double lipschitz, double xstar_norm) {
  const double sqrt_c = std::sqrt(c);
  return std::sqrt(2.0 * (lipschitz + c * vm) * vm / (c * vn)) + 2.0 * (n - m) / (n * sqrt_c) +
         ((2.0 + std::sqrt(2.0)) * sqrt_c + c * xstar_norm) * (vm - vn) / std::sqrt(c * vn);
}

double condition2_lhs(double vm, double rho, double k_const) {
  const double lead = 16.0 / std::pow(3.0 - rho, 4);
  return lead * (36.0 * k_const * k_const * (1.0 + rho) * (1.0 + rho) * vm * vm +
                 30.0 * std::pow(k_const, 1.5) * rho * (1.0 + rho) * std::pow(vm, 1.5) +
                 6.0 * k_const * rho * rho * vm);
}

double simplified_condition1(double alpha, double lipschitz, double c) {
  return std::sqrt(2.0 * alpha * lipschitz / c) + 2.0 * (alpha - 1.0) / (alpha * std::sqrt(c));
}

double simplified_condition2(double alpha, double rho, double c, double xstar_norm) {
  const double k_const = carry_constant(c, xstar_norm, alpha);
  return 96.0 * k_const * rho * rho / ((3.0 - rho) * (3.0 - rho));
}

double step_subopt_bound(double subopt_m, double epsilon) {
  const double s = std::max(0.0, subopt_m);
  const double e = epsilon;
  return 16.0 / std::pow(3.0 - e, 4) *
         (36.0 * (1.0 + e) * (1.0 + e) * s * s + 30.0 * e * (1.0 + e) * std::pow(s, 1.5) + 6.0 * e * e * s);
}

double step_decrement_bound(double lambda_m, double epsilon) {
  const double denom = 1.0 - (1.0 + epsilon) * lambda_m;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return ((1.0 + epsilon) * lambda_m * lambda_m + epsilon * lambda_m) / (denom * denom);
}

double suggested_c_threshold(double lipschitz) {
  const double t = 2.0 * std::sqrt(lipschitz) + 1.0;
  return 16.0 * t * t;
}

double suggested_rho(double c, double xstar_norm) {
  return 9.0 / (21.0 * std::sqrt(c * xstar_norm * xstar_norm + 16.0) + 3.0);
}

DiagnosticsReport theory_report(const TheoryInputs& in) {
  if (!(in.m >= 1 && in.m < in.n)) throw ValidationError("theory_report: need 1 <= m < n");
  in.risk.validate();
  DiagnosticsReport r;
  const double c = in.risk.c;
  r.m = in.m;
  r.n = in.n;
  r.alpha = static_cast<double>(in.n) / static_cast<double>(in.m);
  r.v_m = statistical_accuracy(in.risk.schedule, in.m);
  r.v_n = statistical_accuracy(in.risk.schedule, in.n);
  r.rho = in.rho;
  r.epsilon = in.epsilon;
  r.lambda_m = in.lambda_m;
  r.xstar_norm_used = in.xstar_norm;

  r.K = carry_constant(c, in.xstar_norm, r.alpha);
  r.carry_bound = r.K * r.v_m;
  r.cond1_lhs = condition1_lhs(static_cast<double>(in.m), static_cast<double>(in.n), r.v_m, r.v_n, c, in.lipschitz,
                               in.xstar_norm);
  r.cond2_lhs = condition2_lhs(r.v_m, in.rho, r.K);
  r.simplified_lhs1 = simplified_condition1(r.alpha, in.lipschitz, c);
  r.simplified_lhs2 = simplified_condition2(r.alpha, in.rho, c, in.xstar_norm);

  r.subopt_m_measured = in.subopt_m.has_value();
  r.subopt_m_used = in.subopt_m.value_or(in.lambda_m * in.lambda_m);
  r.step_subopt_rhs = step_subopt_bound(r.subopt_m_used, in.epsilon);
  r.step_decrement_rhs = step_decrement_bound(in.lambda_m, in.epsilon);
  r.sandwich_lo = in.lambda_m * in.lambda_m / 6.0;
  r.sandwich_hi = in.lambda_m * in.lambda_m;
  return r;
}

DiagnosticsReport theory_report(const Dataset& data, const Vector& x_m, std::size_t m, std::size_t n,
                                const RiskConfig& risk, double rho, double epsilon, std::optional<double> xstar_norm,
                                const Vector* xstar_n) {
  const RiskView view(data, n, risk);
  TheoryInputs in;
  in.m = m;
  in.n = n;
  in.risk = risk;
  in.lipschitz = view.lipschitz();
  in.rho = rho;
  in.epsilon = epsilon;
  in.xstar_norm = xstar_norm.value_or(x_m.norm());
  in.lambda_m = newton_decrement(view, x_m);
  if (xstar_n) in.subopt_m = stage_subopt(view, x_m, *xstar_n);
  return theory_report(in);
}

}  // namespace ktan
