#pragma once

#include "ktan/common.hpp"
#include "ktan/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ktan {

/// Reads libsvm/svmlight text: `<label> <index>:<value> ...` with 1-based,
/// strictly increasing indices. Labels +1/1 map to +1 and -1/0 to -1.
/// Blank lines and `#` comments are skipped. `dim` may declare more
/// features than the largest index seen.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim = std::nullopt);
Dataset load_libsvm(const std::string& path, std::optional<std::size_t> dim = std::nullopt);

/// Writes values with 17 significant digits so parse_libsvm reproduces them exactly.
void write_libsvm(const Dataset& data, std::ostream& out);

enum class DecayKind { Geometric, Power };

struct SyntheticSpec {
  std::size_t n_samples = 8192;
  std::size_t dim = 200;
  DecayKind decay = DecayKind::Geometric;
  double decay_param = 0.5;  // ratio for Geometric, exponent for Power
  double label_noise = 0.0;
  std::uint64_t seed = 1;
  double ground_truth_scale = 2.0;

  void validate() const;
  /// Population eigenvalues of E[a a^T], largest first (leading value 1).
  Vector spectrum() const;
};

struct SyntheticData {
  Dataset data;
  Vector ground_truth;
};

/// Gaussian features with second moment Q diag(spectrum) Q^T for a random
/// rotation Q; labels drawn from the logistic model at the ground truth,
/// then flipped with probability label_noise.
SyntheticData synthesize(const SyntheticSpec& spec);

/// Parses `synth:n=8192,p=200,decay=geo:0.5,noise=0.05,seed=7[,scale=2]`
/// (`decay=pow:<exponent>` selects power-law decay).
SyntheticSpec parse_synthetic_spec(const std::string& text);
bool is_synthetic_spec(const std::string& text);

/// One Fisher-Yates shuffle fixing the global sample order; seed 0 keeps the order.
Dataset permute_prefix(const Dataset& data, std::uint64_t seed);

struct NormalizedData {
  Dataset data;
  std::size_t dropped = 0;  // all-zero samples removed
};

/// Scales every sample to unit Euclidean norm.
NormalizedData normalize_rows(const Dataset& data);

}  // namespace ktan
