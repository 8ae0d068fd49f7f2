#include "ktan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>
#include <vector>

#include "ktan/risk.hpp"

namespace ktan {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, std::uint64_t& out) {
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim) {
  struct Row {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    int label;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;

    Row row;
    std::size_t pos = 0;
    bool first = true;
    while (pos < body.size()) {
      const auto end = body.find_first_of(" \t", pos);
      const auto tok = body.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      pos = (end == std::string_view::npos) ? body.size() : body.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = body.size();

      if (first) {
        double label = 0.0;
        if (!parse_double(tok, label)) throw ParseError(line_no, "label '" + std::string(tok) + "' is not numeric");
        if (label == 1.0) {
          row.label = 1;
        } else if (label == -1.0 || label == 0.0) {
          row.label = -1;
        } else {
          throw ParseError(line_no, "label '" + std::string(tok) + "' is not one of -1, 0, +1");
        }
        first = false;
        continue;
      }

      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError(line_no, "feature '" + std::string(tok) + "' lacks ':'");
      std::uint64_t index = 0;
      if (!parse_index(tok.substr(0, colon), index))
        throw ParseError(line_no, "feature index '" + std::string(tok.substr(0, colon)) + "' is not an integer");
      if (index == 0) throw ParseError(line_no, "feature index 0 (indices are 1-based)");
      if (index > std::numeric_limits<std::uint32_t>::max()) throw ParseError(line_no, "feature index too large");
      const auto zero_based = static_cast<std::uint32_t>(index - 1);
      if (!row.idx.empty() && zero_based <= row.idx.back())
        throw ParseError(line_no, "feature indices are not strictly increasing");
      double value = 0.0;
      if (!parse_double(tok.substr(colon + 1), value))
        throw ParseError(line_no, "feature value '" + std::string(tok.substr(colon + 1)) + "' is not a finite number");
      row.idx.push_back(zero_based);
      row.val.push_back(value);
      max_index = std::max<std::size_t>(max_index, index);
    }
    rows.push_back(std::move(row));
  }

  const std::size_t p = dim.value_or(max_index);
  if (p < max_index) throw ValidationError("declared dimension is smaller than the largest feature index");
  Dataset out(p);
  for (const auto& r : rows) out.add_sample(r.idx, r.val, r.label);
  return out;
}

Dataset load_libsvm(const std::string& path, std::optional<std::size_t> dim) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  return parse_libsvm(in, dim);
}

void write_libsvm(const Dataset& data, std::ostream& out) {
  char buf[64];
  std::string line;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = data.sample(i);
    line = s.label > 0 ? "+1" : "-1";
    for (std::size_t j = 0; j < s.indices.size(); ++j) {
      line += ' ';
      line += std::to_string(s.indices[j] + 1);
      line += ':';
      const auto res = std::to_chars(buf, buf + sizeof(buf), s.values[j], std::chars_format::general, 17);
      line.append(buf, res.ptr);
    }
    line += '\n';
    out << line;
  }
}

void SyntheticSpec::validate() const {
  if (n_samples < 1) throw ValidationError("synthetic spec: n must be positive");
  if (dim < 1) throw ValidationError("synthetic spec: p must be positive");
  if (decay == DecayKind::Geometric && !(decay_param > 0.0 && decay_param <= 1.0))
    throw ValidationError("synthetic spec: geometric rate must lie in (0, 1]");
  if (decay == DecayKind::Power && !(decay_param >= 0.0))
    throw ValidationError("synthetic spec: power exponent must be non-negative");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) throw ValidationError("synthetic spec: noise must lie in [0, 0.5)");
  if (!(ground_truth_scale >= 0.0) || !std::isfinite(ground_truth_scale))
    throw ValidationError("synthetic spec: ground truth scale must be non-negative");
}

Vector SyntheticSpec::spectrum() const {
  Vector s(static_cast<Index>(dim));
  for (Index i = 0; i < s.size(); ++i) {
    s[i] = decay == DecayKind::Geometric ? std::pow(decay_param, static_cast<double>(i))
                                         : std::pow(static_cast<double>(i + 1), -decay_param);
  }
  return s;
}

SyntheticData synthesize(const SyntheticSpec& spec) {
  spec.validate();
  const Index p = static_cast<Index>(spec.dim);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Matrix g(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) g(i, j) = gauss(rng);
  const Matrix rotation = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(p, p);
  const Vector scale = spec.spectrum().cwiseSqrt();

  // Ground truth weighted toward the high-variance directions so it is identifiable.
  Vector coeffs(p);
  for (Index i = 0; i < p; ++i) coeffs[i] = gauss(rng) * scale[i];
  Vector truth = rotation * coeffs;
  if (truth.norm() > 0.0) truth *= spec.ground_truth_scale / truth.norm();

  const Matrix transform = rotation * scale.asDiagonal();
  SyntheticData out{Dataset(spec.dim), truth};
  Vector z(p);
  std::vector<double> features(spec.dim);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    for (Index j = 0; j < p; ++j) z[j] = gauss(rng);
    const Vector a = transform * z;
    int label = unif(rng) < sigmoid(a.dot(truth)) ? 1 : -1;
    if (unif(rng) < spec.label_noise) label = -label;
    std::copy(a.data(), a.data() + p, features.begin());
    out.data.add_dense_sample(features, label);
  }
  return out;
}

bool is_synthetic_spec(const std::string& text) { return text.rfind("synth:", 0) == 0; }

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  if (!is_synthetic_spec(text)) throw ValidationError("synthetic spec must start with 'synth:'");
  SyntheticSpec spec;
  std::stringstream ss(text.substr(6));
  std::string item;
  auto number = [&](const std::string& key, const std::string& v) {
    double out = 0.0;
    if (!parse_double(v, out)) throw ValidationError("synthetic spec: bad value for '" + key + "'");
    return out;
  };
  auto count = [&](const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    if (!parse_index(v, out)) throw ValidationError("synthetic spec: bad integer for '" + key + "'");
    return out;
  };
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("synthetic spec: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "n") {
      spec.n_samples = count(key, value);
    } else if (key == "p") {
      spec.dim = count(key, value);
    } else if (key == "decay") {
      const auto colon = value.find(':');
      const std::string kind = value.substr(0, colon);
      if (colon == std::string::npos) throw ValidationError("synthetic spec: decay needs kind:parameter");
      if (kind == "geo") {
        spec.decay = DecayKind::Geometric;
      } else if (kind == "pow") {
        spec.decay = DecayKind::Power;
      } else {
        throw ValidationError("synthetic spec: unknown decay '" + kind + "'");
      }
      spec.decay_param = number(key, value.substr(colon + 1));
    } else if (key == "noise") {
      spec.label_noise = number(key, value);
    } else if (key == "seed") {
      spec.seed = count(key, value);
    } else if (key == "scale") {
      spec.ground_truth_scale = number(key, value);
    } else {
      throw ValidationError("synthetic spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

Dataset permute_prefix(const Dataset& data, std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
  }
  Dataset out(data.dim());
  for (std::size_t i : order) {
    const auto s = data.sample(i);
    out.add_sample(s.indices, s.values, s.label);
  }
  out.set_order_seed(seed);
  return out;
}

NormalizedData normalize_rows(const Dataset& data) {
  NormalizedData out{Dataset(data.dim()), 0};
  std::vector<double> scaled;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = data.sample(i);
    const double norm = std::sqrt(s.squared_norm());
    if (norm == 0.0) {
      ++out.dropped;
      continue;
    }
    scaled.assign(s.values.begin(), s.values.end());
    for (double& v : scaled) v /= norm;
    out.data.add_sample(s.indices, scaled, s.label);
  }
  if (out.data.empty()) throw ValidationError("normalize_rows: every sample has zero features");
  out.data.set_order_seed(data.order_seed());
  return out;
}

}  // namespace ktan
