#include "ktan/baselines.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>

namespace ktan {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kDivergenceNorm = 1e8;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

bool budget_left(const BaselineConfig& cfg, std::uint64_t samples, Clock::time_point start) {
  if (cfg.budget_samples && samples >= *cfg.budget_samples) return false;
  if (cfg.budget_ms && elapsed_ms(start) >= *cfg.budget_ms) return false;
  return true;
}

// Shared bookkeeping for the iterative baselines.
struct Recorder {
  const RiskView& view;
  Clock::time_point start;
  BaselineResult& out;

  void operator()(const Vector& x, std::uint64_t samples, std::uint64_t evals) {
    TraceRecord rec;
    rec.stage = out.trace.size() + 1;
    rec.n = view.n();
    rec.samples_cum = samples;
    rec.grad_evals_cum = evals;
    rec.wall_ms = elapsed_ms(start);
    rec.grad_norm = risk_grad(view, x).norm();
    out.trace.push_back(rec);
    out.iterates.push_back(x);
  }
};

void check_divergence(const Vector& x, const BaselineResult& out, const char* name) {
  if (!x.allFinite() || x.norm() > kDivergenceNorm)
    throw SolverError(std::string(name) + " diverged (||x|| exceeded 1e8)", out.trace);
}

}  // namespace

void BaselineConfig::validate() const {
  const bool first_order = method == Method::SGD || method == Method::SAGA;
  if (first_order && !(step_size > 0.0)) throw ValidationError("step size must be positive");
  if (!(tol >= 0.0)) throw ValidationError("tolerance must be non-negative");
}

IndexSampler::IndexSampler(std::uint64_t seed, std::size_t n) : rng_(seed), dist_(0, n - 1) {
  if (n == 0) throw ValidationError("IndexSampler: empty index range");
}

std::size_t IndexSampler::next() { return dist_(rng_); }

BaselineResult sgd_run(const RiskView& view, const BaselineConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const auto& loss = view.loss();
  const double reg = view.regularization();
  const double eta = config.step_size;
  const std::uint64_t every = config.record_every ? config.record_every : view.n();

  BaselineResult out;
  out.x = Vector::Zero(static_cast<Index>(view.dim()));
  Recorder record{view, start, out};
  IndexSampler sampler(config.seed, view.n());
  std::uint64_t samples = 0;
  bool recorded_last = true;

  while (out.iterations < config.max_iters && budget_left(config, samples, start)) {
    const auto s = view.data().sample(sampler.next());
    const double coef = s.label * loss.derivative(s.label * s.dot(out.x));
    out.x *= (1.0 - eta * reg);
    s.axpy(-eta * coef, out.x);
    ++out.iterations;
    ++samples;
    check_divergence(out.x, out, "SGD");
    recorded_last = out.iterations % every == 0;
    if (recorded_last) record(out.x, samples, samples);
  }
  if (!recorded_last) record(out.x, samples, samples);
  return out;
}

SagaTable::SagaTable(const RiskView& view)
    : view_(view), phi_(view.n(), 0.0), mean_(Vector::Zero(static_cast<Index>(view.dim()))) {}

double SagaTable::fresh_entry(const Vector& x, std::size_t j) const {
  const auto s = view_.data().sample(j);
  return s.label * view_.loss().derivative(s.label * s.dot(x));
}

Vector SagaTable::direction(const Vector& x, std::size_t j) const {
  Vector d = mean_ + view_.regularization() * x;
  view_.data().sample(j).axpy(fresh_entry(x, j) - phi_[j], d);
  return d;
}

void SagaTable::update(const Vector& x, std::size_t j) {
  const double fresh = fresh_entry(x, j);
  view_.data().sample(j).axpy((fresh - phi_[j]) / static_cast<double>(view_.n()), mean_);
  phi_[j] = fresh;
}

BaselineResult saga_run(const RiskView& view, const BaselineConfig& config) {
  config.validate();
  const auto start = Clock::now();
  const double eta = config.step_size;
  const std::uint64_t every = config.record_every ? config.record_every : view.n();

  BaselineResult out;
  out.x = Vector::Zero(static_cast<Index>(view.dim()));
  Recorder record{view, start, out};
  IndexSampler sampler(config.seed, view.n());
  SagaTable table(view);
  std::uint64_t samples = 0;
  bool recorded_last = true;

  while (out.iterations < config.max_iters && budget_left(config, samples, start)) {
    const std::size_t j = sampler.next();
    const Vector dir = table.direction(out.x, j);
    table.update(out.x, j);
    out.x -= eta * dir;
    ++out.iterations;
    ++samples;
    check_divergence(out.x, out, "SAGA");
    recorded_last = out.iterations % every == 0;
    if (recorded_last) record(out.x, samples, samples);
  }
  if (!recorded_last) record(out.x, samples, samples);
  return out;
}

BaselineResult gd_run(const RiskView& view, const BaselineConfig& config, const Vector* start_point) {
  config.validate();
  const auto start = Clock::now();
  const double step = 1.0 / (view.lipschitz() + view.regularization());
  const std::uint64_t every = config.record_every ? config.record_every : 1;

  BaselineResult out;
  out.x = start_point ? *start_point : Vector::Zero(static_cast<Index>(view.dim()));
  std::uint64_t samples = 0;
  std::uint64_t evals = 0;
  while (out.iterations < config.max_iters && budget_left(config, samples, start)) {
    const Vector g = risk_grad(view, out.x);
    if (config.tol > 0.0 && g.norm() <= config.tol) break;
    out.x -= step * g;
    samples += view.n();
    ++evals;
    ++out.iterations;
    check_divergence(out.x, out, "GD");
    if (out.iterations % every == 0) {
      TraceRecord rec;
      rec.stage = out.trace.size() + 1;
      rec.n = view.n();
      rec.samples_cum = samples;
      rec.grad_evals_cum = evals;
      rec.wall_ms = elapsed_ms(start);
      rec.grad_norm = risk_grad(view, out.x).norm();
      out.trace.push_back(rec);
      out.iterates.push_back(out.x);
    }
  }
  return out;
}

Vector damped_newton_step(const RiskView& view, const Vector& x, const Vector& grad, Index cap) {
  Matrix h = data_hessian(view, x, cap);
  h.diagonal().array() += view.regularization();
  const Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw NumericError("Newton step: Hessian is not positive definite");
  const Vector d = llt.solve(grad);
  const double decrement_sq = grad.dot(d);
  if (decrement_sq < 0.0625) return x - d;

  const double f0 = risk_value(view, x);
  double t = 1.0;
  for (int i = 0; i < 60; ++i, t *= 0.5) {
    const Vector trial = x - t * d;
    if (risk_value(view, trial) <= f0 - 0.25 * t * decrement_sq) return trial;
  }
  throw NumericError("Newton step: Armijo backtracking failed");
}

OracleResult newton_oracle(const RiskView& view, double tol, const Vector* start, int max_iters, Index cap) {
  OracleResult out{start ? *start : Vector::Zero(static_cast<Index>(view.dim())), 0.0, 0};
  if (out.x.size() != static_cast<Index>(view.dim())) throw ValidationError("newton_oracle: start has wrong size");
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (;;) {
    const Vector g = risk_grad(view, out.x);
    out.grad_norm = g.norm();
    if (out.grad_norm <= tol) return out;
    if (out.grad_norm < best) {
      best = out.grad_norm;
      stalled = 0;
    } else if (++stalled >= 5) {
      throw OracleError("newton_oracle: stagnated at ||grad|| = " + std::to_string(out.grad_norm));
    }
    if (out.iterations >= max_iters)
      throw OracleError("newton_oracle: iteration cap reached at ||grad|| = " + std::to_string(out.grad_norm));
    out.x = damped_newton_step(view, out.x, g, cap);
    ++out.iterations;
  }
}

RunResult adanewton_run(const Dataset& data, const RiskConfig& risk, const SolverConfig& config) {
  SolverConfig exact = config;
  exact.rho0 = 0.0;
  exact.backend = EigBackend::Dense;
  return run(data, risk, exact);
}

}  // namespace ktan
