#pragma once

#include "ktan/common.hpp"
#include "ktan/risk.hpp"
#include "ktan/solver.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace ktan {

enum class Method { GD, SGD, SAGA, AdaNewton, NewtonOracle };

struct BaselineConfig {
  Method method = Method::SGD;
  double step_size = 0.08;
  /// Iteration cap. First-order methods: stochastic steps; GD: full steps.
  std::uint64_t max_iters = 100;
  /// GD stops once ||grad R_n|| <= tol (0 disables).
  double tol = 0.0;
  std::uint64_t seed = 1;
  /// Stop once samples_cum reaches this many per-sample gradients.
  std::optional<std::uint64_t> budget_samples;
  /// Stop once this much wall time has elapsed.
  std::optional<std::int64_t> budget_ms;
  /// Record a trace row every this many iterations (0 = every n iterations).
  std::uint64_t record_every = 0;

  void validate() const;
};

/// A baseline trajectory: trace rows and the iterate each row describes.
struct BaselineResult {
  Vector x;
  std::vector<TraceRecord> trace;
  std::vector<Vector> iterates;
  std::uint64_t iterations = 0;
};

/// Uniform with-replacement index draws used by SGD and SAGA.
class IndexSampler {
 public:
  IndexSampler(std::uint64_t seed, std::size_t n);
  std::size_t next();

 private:
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::size_t> dist_;
};

/// x <- x - eta (grad f_i(x) + c V_N x), one tick per iteration.
BaselineResult sgd_run(const RiskView& view, const BaselineConfig& config);

/// SAGA gradient table storing one scalar per sample: grad f_i = phi_i a_i.
class SagaTable {
 public:
  explicit SagaTable(const RiskView& view);

  /// (phi_j(x) - phi_j) a_j + mean_i phi_i a_i + c V_n x, the unbiased SAGA direction.
  Vector direction(const Vector& x, std::size_t j) const;
  /// Replaces phi_j with its value at x and refreshes the table mean.
  void update(const Vector& x, std::size_t j);

  const Vector& mean() const { return mean_; }
  double entry(std::size_t j) const { return phi_[j]; }
  double fresh_entry(const Vector& x, std::size_t j) const;

 private:
  RiskView view_;
  std::vector<double> phi_;
  Vector mean_;
};

BaselineResult saga_run(const RiskView& view, const BaselineConfig& config);

/// Full gradient descent with step 1/(M + c V_n); n ticks per iteration.
BaselineResult gd_run(const RiskView& view, const BaselineConfig& config, const Vector* start = nullptr);

struct OracleResult {
  Vector x;
  double grad_norm = 0.0;
  int iterations = 0;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

/// One damped Newton step on R_n: exact direction, Armijo backtracking
/// (sufficient decrease 0.25, shrink 0.5) unless the Newton decrement is
/// already below 1/4, in which case the full step is taken.
Vector damped_newton_step(const RiskView& view, const Vector& x, const Vector& grad, Index cap = kDefaultDenseCap);

/// High-precision minimizer of R_n: damped Newton until ||grad R_n|| <= tol.
OracleResult newton_oracle(const RiskView& view, double tol = 1e-12, const Vector* start = nullptr,
                           int max_iters = 200, Index cap = kDefaultDenseCap);

/// The k = p special case of the truncated method: run() with rho0 = 0 on the dense backend.
RunResult adanewton_run(const Dataset& data, const RiskConfig& risk, const SolverConfig& config);

}  // namespace ktan
