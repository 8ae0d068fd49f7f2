#pragma once

#include "ktan/common.hpp"
#include "ktan/dataset.hpp"

#include <atomic>
#include <cstdint>

namespace ktan {

/// Statistical accuracy schedule V_n.
enum class Schedule { InvN, InvSqrtN };

enum class LossKind { Logistic };

/// A loss expressed through the margin s = y a^T x: value, derivative and
/// curvature weight. Adding a loss means adding one of these.
struct MarginLoss {
  double (*value)(double s);
  double (*derivative)(double s);
  double (*curvature)(double s);
  /// value(s + ds) - value(s), accurate when ds is small.
  double (*difference)(double s, double ds);
  /// Upper bound on curvature(s); the per-sample Lipschitz constant is this times ||a||^2.
  double curvature_bound;
};

const MarginLoss& logistic_loss();
const MarginLoss& margin_loss(LossKind kind);

/// Numerically stable sigmoid 1 / (1 + exp(-s)).
double sigmoid(double s);

struct RiskConfig {
  double c = 1.0;
  Schedule schedule = Schedule::InvN;
  LossKind loss = LossKind::Logistic;

  void validate() const;
};

double statistical_accuracy(Schedule schedule, std::size_t n);

/// Work meter shared by evaluations; `samples` counts per-sample gradients.
struct WorkMeter {
  std::atomic<std::uint64_t> samples{0};
  std::atomic<std::uint64_t> calls{0};

  void charge(std::uint64_t n) {
    samples.fetch_add(n, std::memory_order_relaxed);
    calls.fetch_add(1, std::memory_order_relaxed);
  }
};

/// R_n over the first n samples of a dataset:
///   R_n(x) = (1/n) sum_i f_i(x) + (c V_n / 2) ||x||^2.
/// Non-owning; the dataset must outlive the view.
class RiskView {
 public:
  RiskView(const Dataset& data, std::size_t n, RiskConfig config);

  const Dataset& data() const { return *data_; }
  std::size_t n() const { return n_; }
  std::size_t dim() const { return data_->dim(); }
  const RiskConfig& config() const { return config_; }
  const MarginLoss& loss() const { return *loss_; }

  /// V_n
  double accuracy() const { return statistical_accuracy(config_.schedule, n_); }
  /// c V_n, the strong convexity modulus.
  double regularization() const { return config_.c * accuracy(); }
  /// M = max_i ||a_i||^2 / 4 over the prefix (logistic).
  double lipschitz() const;

  RiskView with_prefix(std::size_t n) const { return RiskView(*data_, n, config_); }

 private:
  const Dataset* data_;
  std::size_t n_;
  RiskConfig config_;
  const MarginLoss* loss_;
};

double accuracy(const RiskView& view);
double risk_value(const RiskView& view, const Vector& x);
Vector risk_grad(const RiskView& view, const Vector& x, WorkMeter* meter = nullptr);

/// sum_{begin <= i < end} grad f_i(x), unscaled and without the regularizer.
///
/// Lets a caller holding the sum over [0, m) at x extend it to [0, n)
/// by touching only samples m..n-1.
Vector loss_grad_sum(const Dataset& data, const RiskConfig& config, const Vector& x, std::size_t begin,
                     std::size_t end);

/// Assembles grad R_n from a loss gradient sum over the full prefix.
Vector risk_grad_from_sum(const RiskView& view, const Vector& x, const Vector& loss_sum);

/// grad^2 L_n(x), the data part only; c V_n I is not included.
Matrix data_hessian(const RiskView& view, const Vector& x, Index cap = kDefaultDenseCap);

/// grad^2 L_n(x) v without forming the matrix.
Vector data_hessian_vec(const RiskView& view, const Vector& x, const Vector& v);

/// Matrix-free grad^2 L_n(x) with the curvature weights precomputed at x.
class HessianOperator {
 public:
  HessianOperator(const RiskView& view, const Vector& x);

  Index dim() const { return static_cast<Index>(view_.dim()); }
  Vector apply(const Vector& v) const;
  Matrix apply(const Matrix& block) const;

 private:
  RiskView view_;
  std::vector<double> weights_;  // curvature(s_i) / n
};

}  // namespace ktan
