#include "ktan/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace ktan {

void Dataset::add_sample(std::span<const std::uint32_t> indices, std::span<const double> values, int label) {
  if (indices.size() != values.size()) throw ValidationError("sample has mismatched index/value counts");
  if (label != 1 && label != -1) throw ValidationError("label must be -1 or +1");
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= dim_) throw ValidationError("feature index out of range");
    if (j > 0 && indices[j] <= indices[j - 1]) throw ValidationError("feature indices must be strictly increasing");
    if (!std::isfinite(values[j])) throw ValidationError("feature value is not finite");
  }
  indices_.insert(indices_.end(), indices.begin(), indices.end());
  values_.insert(values_.end(), values.begin(), values.end());
  row_ptr_.push_back(values_.size());
  labels_.push_back(static_cast<std::int8_t>(label));
  if (!indices.empty()) max_index_seen_ = std::max<std::size_t>(max_index_seen_, indices.back() + 1);
}

void Dataset::add_dense_sample(std::span<const double> features, int label) {
  if (features.size() != dim_) throw ValidationError("dense sample has wrong dimension");
  std::vector<std::uint32_t> idx(dim_);
  for (std::size_t j = 0; j < dim_; ++j) idx[j] = static_cast<std::uint32_t>(j);
  add_sample(idx, features, label);
}

void Dataset::set_dim(std::size_t dim) {
  if (dim < max_index_seen_) throw ValidationError("declared dimension is smaller than a feature index in use");
  dim_ = dim;
}

double Dataset::max_squared_norm(std::size_t n) const {
  const std::size_t count = (n == 0) ? size() : std::min(n, size());
  double best = 0.0;
  for (std::size_t i = 0; i < count; ++i) best = std::max(best, sample(i).squared_norm());
  return best;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t word) {
  for (int b = 0; b < 8; ++b) {
    h ^= (word >> (8 * b)) & 0xffU;
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, dim_);
  fnv_mix(h, size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto s = sample(i);
    fnv_mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(s.label)));
    fnv_mix(h, s.indices.size());
    for (std::size_t j = 0; j < s.indices.size(); ++j) {
      fnv_mix(h, s.indices[j]);
      fnv_mix(h, std::bit_cast<std::uint64_t>(s.values[j]));
    }
  }
  return h;
}

Matrix Dataset::to_dense(std::size_t n) const {
  const std::size_t count = (n == 0) ? size() : std::min(n, size());
  Matrix a = Matrix::Zero(static_cast<Index>(count), static_cast<Index>(dim_));
  for (std::size_t i = 0; i < count; ++i) {
    const auto s = sample(i);
    for (std::size_t j = 0; j < s.indices.size(); ++j) a(static_cast<Index>(i), s.indices[j]) = s.values[j];
  }
  return a;
}

bool Dataset::operator==(const Dataset& other) const {
  return dim_ == other.dim_ && row_ptr_ == other.row_ptr_ && indices_ == other.indices_ && values_ == other.values_ &&
         labels_ == other.labels_;
}

}  // namespace ktan
