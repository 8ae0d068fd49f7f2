#include "ktan/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ktan/baselines.hpp"

namespace ktan {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

}  // namespace

void SolverConfig::validate() const {
  if (!(alpha0 > 1.0) || !std::isfinite(alpha0)) throw ValidationError("alpha0 must be greater than 1");
  if (!(rho0 >= 0.0 && rho0 <= 1.0)) throw ValidationError("rho0 must lie in [0, 1]");
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (m0 < 1) throw ValidationError("m0 must be at least 1");
  if (max_backtracks < 0) throw ValidationError("max_backtracks must be non-negative");
  if (init_max_iters < 0 || safeguard_max_iters < 1) throw ValidationError("iteration caps must be positive");
}

InitResult init_seed(const Dataset& data, const RiskConfig& risk, const SolverConfig& config) {
  if (config.m0 > data.size()) throw ValidationError("m0 exceeds the number of samples");
  const RiskView view(data, config.m0, risk);
  const double step = 1.0 / (view.lipschitz() + view.regularization());

  InitResult out{Vector::Zero(static_cast<Index>(data.dim())), 0, 0, 0.0};
  for (;;) {
    const Vector g = risk_grad(view, out.x);
    out.samples += view.n();
    const auto check = accuracy_check_from_grad(view, g);
    out.grad_norm = check.grad_norm;
    if (check.pass) return out;
    if (out.iterations >= config.init_max_iters) {
      throw InitError("gradient descent on R_m0 stopped after " + std::to_string(out.iterations) +
                          " iterations with ||grad|| = " + std::to_string(check.grad_norm) + " (need < " +
                          std::to_string(check.threshold) + ")",
                      check.grad_norm);
    }
    out.x -= step * g;
    ++out.iterations;
  }
}

StepResult ktan_step(const Vector& x_m, const RiskView& view, double rho, const StepOptions& options) {
  return ktan_step(x_m, risk_grad(view, x_m), view, rho, options);
}

StepResult ktan_step(const Vector& x_m, const Vector& grad, const RiskView& view, double rho,
                     const StepOptions& options) {
  const Index p = static_cast<Index>(view.dim());
  if (x_m.size() != p || grad.size() != p) throw ValidationError("ktan_step: dimension mismatch");
  if (!x_m.allFinite()) throw ValidationError("ktan_step: iterate is not finite");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("ktan_step: rho must lie in [0, 1]");

  const double reg = view.regularization();
  const double threshold = rho * reg;

  TruncatedEig factors;
  if (options.backend == EigBackend::Dense) {
    factors = truncate(full_sym_eig(data_hessian(view, x_m, options.dense_cap)), threshold);
  } else {
    const HessianOperator hessian(view, x_m);
    factors = randomized_truncated_eig([&hessian](const Matrix& v) { return hessian.apply(v); }, p, threshold,
                                       options.eig);
  }

  StepResult out;
  out.k = factors.rank();
  out.epsilon = truncation_epsilon(factors, reg);
  out.grad_norm = grad.norm();
  const TruncatedInverse inverse(std::move(factors), reg);
  out.x = x_m - inverse.apply(grad);
  if (!out.x.allFinite()) throw NumericError("ktan_step: step is not finite");
  return out;
}

AccuracyCheck accuracy_check_from_grad(const RiskView& view, const Vector& grad) {
  AccuracyCheck out;
  out.grad_norm = grad.norm();
  out.threshold = std::sqrt(2.0 * view.config().c) * view.accuracy();
  out.pass = out.grad_norm < out.threshold;
  out.bound = out.grad_norm * out.grad_norm / (2.0 * view.regularization());
  return out;
}

AccuracyCheck accuracy_check(const RiskView& view, const Vector& x) {
  return accuracy_check_from_grad(view, risk_grad(view, x));
}

std::size_t next_sample_size(std::size_t m, double alpha, std::size_t total) {
  const double grown = std::floor(alpha * static_cast<double>(m));
  std::size_t n = grown >= static_cast<double>(total) ? total : static_cast<std::size_t>(grown);
  n = std::max(n, m + 1);
  return std::min(n, total);
}

RunResult run(const Dataset& data, const RiskConfig& risk, const SolverConfig& config) {
  config.validate();
  risk.validate();
  const std::size_t total = data.size();
  if (config.m0 > total) throw ValidationError("m0 exceeds the number of samples");

  const auto start = Clock::now();
  RunResult result;
  result.init = init_seed(data, risk, config);

  StepOptions options{config.backend, config.dense_cap, config.eig};
  Vector x = result.init.x;
  std::size_t m = config.m0;
  // Loss gradient sum over the first m samples at x: the exit check of one
  // stage supplies the first m terms of the next stage's gradient.
  Vector cached_sum = loss_grad_sum(data, risk, x, 0, m);
  std::uint64_t samples_cum = 0;
  std::uint64_t grad_evals = 0;

  auto record = [&](const StageAttempt& att, std::size_t attempt, double grad_norm, double alpha) {
    TraceRecord rec;
    rec.stage = result.stages;
    rec.attempt = attempt;
    rec.n = att.n;
    rec.samples_cum = samples_cum;
    rec.grad_evals_cum = grad_evals;
    rec.wall_ms = elapsed_ms(start);
    rec.grad_norm = grad_norm;
    rec.k = att.k;
    rec.epsilon = att.epsilon;
    rec.alpha_used = alpha;
    rec.rho_used = att.rho;
    rec.accepted = att.accepted;
    rec.safeguard = att.safeguard;
    result.trace.push_back(rec);
    result.attempts.push_back(att);
  };

  while (m < total) {
    ++result.stages;
    double alpha = config.alpha0;
    double rho = config.rho0;
    bool accepted = false;
    std::size_t n = m;

    for (int attempt = 0; attempt <= config.max_backtracks && !accepted; ++attempt) {
      n = next_sample_size(m, alpha, total);
      const RiskView view(data, n, risk);
      const Vector grad = risk_grad_from_sum(view, x, cached_sum + loss_grad_sum(data, risk, x, m, n));
      samples_cum += n;
      ++grad_evals;

      StageAttempt att{m, n, x, x, rho, 0.0, 0, false, false};
      double grad_norm = std::numeric_limits<double>::infinity();
      Vector exit_sum;
      try {
        const StepResult step = ktan_step(x, grad, view, rho, options);
        att.x_n = step.x;
        att.k = step.k;
        att.epsilon = step.epsilon;
        exit_sum = loss_grad_sum(data, risk, step.x, 0, n);
        ++grad_evals;
        const auto check = accuracy_check_from_grad(view, risk_grad_from_sum(view, step.x, exit_sum));
        grad_norm = check.grad_norm;
        att.accepted = check.pass;
      } catch (const NumericError&) {
        att.accepted = false;
      }
      record(att, static_cast<std::size_t>(attempt), grad_norm, alpha);

      if (att.accepted) {
        x = att.x_n;
        cached_sum = std::move(exit_sum);
        accepted = true;
      } else {
        ++result.backtracks;
        alpha *= config.beta;
        rho *= config.delta;
      }
    }
    if (accepted) {
      m = n;
      continue;
    }

    // Safeguard: freeze n and take damped exact Newton steps until the exit test passes.
    const RiskView view(data, n, risk);
    Vector y = x;
    bool done = false;
    for (int it = 0; it < config.safeguard_max_iters && !done; ++it) {
      const Vector grad = risk_grad(view, y);
      samples_cum += n;
      ++grad_evals;
      StageAttempt att{m, n, y, y, 0.0, 0.0, static_cast<Index>(data.dim()), false, true};
      att.x_n = damped_newton_step(view, y, grad, config.dense_cap);
      const auto check = accuracy_check(view, att.x_n);
      ++grad_evals;
      att.accepted = check.pass;
      record(att, static_cast<std::size_t>(config.max_backtracks + 1 + it), check.grad_norm,
             static_cast<double>(n) / static_cast<double>(m));
      y = att.x_n;
      done = check.pass;
    }
    if (!done) throw SolverError("safeguard Newton iterations failed to reach statistical accuracy", result.trace);
    x = y;
    cached_sum = loss_grad_sum(data, risk, x, 0, n);
    m = n;
  }

  result.x = x;
  return result;
}

}  // namespace ktan
