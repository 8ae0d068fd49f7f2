#pragma once

#include "ktan/common.hpp"
#include "ktan/risk.hpp"

#include <optional>

namespace ktan {

/// lambda_n(x) = (g^T (grad^2 R_n)^{-1} g)^{1/2}. Dense Cholesky when
/// p <= cap, otherwise conjugate gradients on Hessian-vector products to a
/// 1e-10 relative residual. Diagnostic only: the solver never calls it.
double newton_decrement(const RiskView& view, const Vector& x, Index cap = kDefaultDenseCap);

/// S_n(x) = R_n(x) - R_n(x*), evaluated as a sum of per-sample differences
/// so that small suboptimalities keep their relative accuracy.
/// Throws NumericError if the result is below -1e-12 (x* is not a minimizer).
double stage_subopt(const RiskView& view, const Vector& x, const Vector& xstar);

// Closed-form pieces of the convergence theory.

/// K = 3 + (2 + c ||x*||^2 / 2)(1 - 1/alpha)
double carry_constant(double c, double xstar_norm, double alpha);

/// Quadratic-region condition on (m, n):
///   sqrt(2 (M + c V_m) V_m / (c V_n)) + 2 (n - m) / (n sqrt(c))
///   + ((2 + sqrt 2) sqrt(c) + c ||x*||) (V_m - V_n) / sqrt(c V_n)   <= 1/4
double condition1_lhs(double m, double n, double vm, double vn, double c, double lipschitz, double xstar_norm);

/// One-step condition: 16/(3-rho)^4 [36 K^2 (1+rho)^2 V_m^2 + 30 K^{3/2} rho (1+rho) V_m^{3/2}
///   + 6 K rho^2 V_m]  <= V_n
double condition2_lhs(double vm, double rho, double k_const);

/// Large-m simplifications: sqrt(2 alpha M / c) + 2(alpha-1)/(alpha sqrt c) <= 1/4
double simplified_condition1(double alpha, double lipschitz, double c);
/// 96 K rho^2 / (3 - rho)^2 <= 1/alpha
double simplified_condition2(double alpha, double rho, double c, double xstar_norm);

/// S_n(x_n) bound after one truncated step from x_m:
///   16/(3-eps)^4 [36 (1+eps)^2 S^2 + 30 eps (1+eps) S^{3/2} + 6 eps^2 S]
double step_subopt_bound(double subopt_m, double epsilon);

/// lambda_n(x_n) <= ((1+eps) lambda^2 + eps lambda) / (1 - (1+eps) lambda)^2
double step_decrement_bound(double lambda_m, double epsilon);

/// c above which alpha = 2 satisfies the simplified first condition: 16 (2 sqrt M + 1)^2.
double suggested_c_threshold(double lipschitz);
/// rho = 9 / (21 sqrt(c ||x*||^2 + 16) + 3)
double suggested_rho(double c, double xstar_norm);

struct TheoryInputs {
  std::size_t m = 0;
  std::size_t n = 0;
  RiskConfig risk;
  double lipschitz = 0.25;
  double rho = 0.0;
  double epsilon = 0.0;
  double xstar_norm = 0.0;
  double lambda_m = 0.0;                // lambda_n(x_m)
  std::optional<double> subopt_m;       // S_n(x_m); lambda_m^2 stands in when absent
};

struct DiagnosticsReport {
  std::size_t m = 0;
  std::size_t n = 0;
  double alpha = 0.0;
  double v_m = 0.0;
  double v_n = 0.0;
  double rho = 0.0;
  double epsilon = 0.0;
  double lambda_m = 0.0;
  double K = 0.0;
  double carry_bound = 0.0;
  double cond1_lhs = 0.0;
  double cond2_lhs = 0.0;
  double simplified_lhs1 = 0.0;
  double simplified_lhs2 = 0.0;
  double subopt_m_used = 0.0;
  bool subopt_m_measured = false;
  double step_subopt_rhs = 0.0;
  double step_decrement_rhs = 0.0;
  double sandwich_lo = 0.0;
  double sandwich_hi = 0.0;
  double xstar_norm_used = 0.0;

  bool quadratic_region() const { return lambda_m < 0.25; }
  bool cond1_holds() const { return cond1_lhs <= 0.25; }
  bool cond2_holds() const { return cond2_lhs <= v_n; }
  bool simplified1_holds() const { return simplified_lhs1 <= 0.25; }
  bool simplified2_holds() const { return simplified_lhs2 <= 1.0 / alpha; }
};

/// Evaluates every bound for the stage m -> n. Pure.
DiagnosticsReport theory_report(const TheoryInputs& in);

/// Measures lambda_n(x_m) (and S_n(x_m) when x_n* is supplied) on the data,
/// then evaluates the report. The plug-in for ||x*|| defaults to ||x_m||.
DiagnosticsReport theory_report(const Dataset& data, const Vector& x_m, std::size_t m, std::size_t n,
                                const RiskConfig& risk, double rho, double epsilon,
                                std::optional<double> xstar_norm = std::nullopt, const Vector* xstar_n = nullptr);

}  // namespace ktan
