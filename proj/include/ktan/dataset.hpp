#pragma once

#include "ktan/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ktan {

/// One labelled sample. Indices are 0-based and strictly increasing.
struct SampleView {
  std::span<const std::uint32_t> indices;
  std::span<const double> values;
  int label = 1;

  double dot(const Vector& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < indices.size(); ++j) s += values[j] * x[indices[j]];
    return s;
  }

  /// y += a * features
  void axpy(double a, Vector& y) const {
    for (std::size_t j = 0; j < indices.size(); ++j) y[indices[j]] += a * values[j];
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
};

/// Ordered sample store in compressed-row form.
///
/// The row order is the global order shared by every risk prefix: the
/// first m rows are exactly the samples seen by R_m. Reordering happens
/// only through permute_prefix(), which builds a new Dataset.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t dim) : dim_(dim) {}

  /// Appends a sample. Indices must be strictly increasing and < dim(),
  /// values finite, label in {-1, +1}.
  void add_sample(std::span<const std::uint32_t> indices, std::span<const double> values, int label);
  void add_dense_sample(std::span<const double> features, int label);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return labels_.empty(); }

  /// Grows the declared dimension; shrinking below a used index is rejected.
  void set_dim(std::size_t dim);

  SampleView sample(std::size_t i) const {
    const auto b = row_ptr_[i];
    const auto e = row_ptr_[i + 1];
    return {std::span<const std::uint32_t>(indices_).subspan(b, e - b),
            std::span<const double>(values_).subspan(b, e - b), labels_[i]};
  }

  std::span<const std::int8_t> labels() const { return labels_; }
  std::size_t nnz() const { return values_.size(); }

  /// Seed of the permutation that produced this order (0 = file order).
  std::uint64_t order_seed() const { return order_seed_; }
  void set_order_seed(std::uint64_t seed) { order_seed_ = seed; }

  /// max_i ||a_i||^2 over the first n samples (all when n == 0).
  double max_squared_norm(std::size_t n = 0) const;

  /// FNV-1a over dim, labels, indices and the bit patterns of the values.
  std::uint64_t fingerprint() const;

  Matrix to_dense(std::size_t n = 0) const;

  bool operator==(const Dataset& other) const;

 private:
  std::size_t dim_ = 0;
  std::size_t max_index_seen_ = 0;
  std::uint64_t order_seed_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
  std::vector<std::int8_t> labels_;
};

}  // namespace ktan
