#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ergsense {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base of every error the library throws. `kind()` is the machine-readable
// tag written into CLI error records.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// A point or parameter fell outside the region where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_violation"; }
};

// Non-finite values or a diverging iteration.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric_blowup"; }
};

// Malformed configuration, arguments or input files.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_config"; }
};

// Inputs are valid individually but describe a degenerate problem.
class DegenerateError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate_input"; }
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace ergsense
