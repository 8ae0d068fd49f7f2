#pragma once

#include "ktan/common.hpp"
#include "ktan/dataset.hpp"
#include "ktan/linalg.hpp"
#include "ktan/risk.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ktan {

enum class EigBackend { Dense, Randomized };

struct SolverConfig {
  double alpha0 = 2.0;   // sample growth factor, > 1
  double rho0 = 0.05;    // truncation factor, in [0, 1]
  double beta = 0.75;    // alpha backtracking multiplier
  double delta = 0.5;    // rho backtracking multiplier
  std::size_t m0 = 124;
  int max_backtracks = 10;
  EigBackend backend = EigBackend::Dense;
  std::uint64_t seed = 0;

  int init_max_iters = 1000;
  int safeguard_max_iters = 100;
  Index dense_cap = kDefaultDenseCap;
  RandomizedEigParams eig;

  void validate() const;
};

/// One row of a convergence trace. Second-order solvers write one per
/// stage attempt; first-order baselines one per recording interval.
struct TraceRecord {
  std::size_t stage = 0;
  std::size_t attempt = 0;
  std::size_t n = 0;
  std::uint64_t samples_cum = 0;
  std::uint64_t grad_evals_cum = 0;
  std::int64_t wall_ms = 0;
  double grad_norm = 0.0;
  Index k = 0;
  double epsilon = 0.0;
  double alpha_used = 0.0;
  double rho_used = 0.0;
  std::optional<double> subopt;
  bool accepted = true;
  bool safeguard = false;
};

/// Iterates behind one stage attempt.
struct StageAttempt {
  std::size_t m = 0;
  std::size_t n = 0;
  Vector x_m;
  Vector x_n;
  double rho = 0.0;
  double epsilon = 0.0;
  Index k = 0;
  bool accepted = false;
  bool safeguard = false;
};

struct InitResult {
  Vector x;
  int iterations = 0;
  std::uint64_t samples = 0;
  double grad_norm = 0.0;
};

struct RunResult {
  Vector x;
  std::vector<TraceRecord> trace;
  std::vector<StageAttempt> attempts;  // parallel to trace
  InitResult init;
  std::size_t stages = 0;
  std::size_t backtracks = 0;
};

class InitError : public Error {
 public:
  InitError(const std::string& what, double grad_norm) : Error(what), grad_norm_(grad_norm) {}
  double grad_norm() const { return grad_norm_; }

 private:
  double grad_norm_;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<TraceRecord> trace) : Error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRecord>& trace() const { return trace_; }

 private:
  std::vector<TraceRecord> trace_;
};

/// Gradient descent on R_{m0} from the origin, step 1/(M + c V_{m0}), until
/// the entry condition ||grad R_{m0}|| < sqrt(2c) V_{m0} holds.
InitResult init_seed(const Dataset& data, const RiskConfig& risk, const SolverConfig& config);

struct StepOptions {
  EigBackend backend = EigBackend::Dense;
  Index dense_cap = kDefaultDenseCap;
  RandomizedEigParams eig;
};

struct StepResult {
  Vector x;
  Index k = 0;
  double epsilon = 0.0;
  double grad_norm = 0.0;  // ||grad R_n(x_m)||
};

/// x_n = x_m - (U_k Sigma_k U_k^T + c V_n I)^{-1} grad R_n(x_m), with k chosen
/// so the first discarded eigenvalue of grad^2 L_n(x_m) is <= rho c V_n.
/// rho = 0 keeps the full spectrum (exact Newton step).
StepResult ktan_step(const Vector& x_m, const RiskView& view, double rho, const StepOptions& options = {});
/// Same step with grad R_n(x_m) already available.
StepResult ktan_step(const Vector& x_m, const Vector& grad, const RiskView& view, double rho,
                     const StepOptions& options = {});

struct AccuracyCheck {
  bool pass = false;
  double grad_norm = 0.0;
  double threshold = 0.0;  // sqrt(2c) V_n
  double bound = 0.0;      // ||grad||^2 / (2 c V_n) >= S_n(x)
};

AccuracyCheck accuracy_check(const RiskView& view, const Vector& x);
AccuracyCheck accuracy_check_from_grad(const RiskView& view, const Vector& grad);

/// Sample size for the next attempt: min(floor(alpha m), N), at least m + 1.
std::size_t next_sample_size(std::size_t m, double alpha, std::size_t total);

/// Adaptive sample size loop with one truncated Newton step per stage and
/// (alpha, rho) backtracking. Meters count n per attempt; the
/// initialization's work is reported separately in RunResult::init.
RunResult run(const Dataset& data, const RiskConfig& risk, const SolverConfig& config);

}  // namespace ktan
