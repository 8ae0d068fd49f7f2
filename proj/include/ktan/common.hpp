#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ktan {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr const char* kVersion = "0.3.0";

/// Largest dimension for which dense p x p Hessians are assembled.
inline constexpr Index kDefaultDenseCap = 4096;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: shapes, ranges, malformed values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a numerical method that failed to make progress.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The requested path is unavailable for this problem size (e.g. dense Hessian over the cap).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ktan
