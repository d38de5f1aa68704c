#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace hdqkd {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A well-posed computation that could not produce a result
/// (non-convergence, no admissible branch, inapplicable bound).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No frames are available for estimating a quantity.
class EstimationImpossible : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// Outcome of checking the multiplicative Chernoff preconditions.
/// Margins are expressed in log space; a condition holds when its
/// margin is >= 0 (first) or > 0 (second).
struct ChernoffDiagnostics {
  bool passes = false;
  double alpha_l = 0.0;
  double margin_lower = 0.0;  // 9/32 - ln(2/eps_c) / alpha_l
  double margin_upper = 0.0;  // 1/3 - ln(1/eps_c_hat) / alpha_l
  std::string reason;
};

class ChernoffInapplicable : public ComputationError {
 public:
  explicit ChernoffInapplicable(ChernoffDiagnostics diag)
      : ComputationError("Chernoff bound inapplicable: " + diag.reason),
        diagnostics_(std::move(diag)) {}

  const ChernoffDiagnostics& diagnostics() const noexcept {
    return diagnostics_;
  }

 private:
  ChernoffDiagnostics diagnostics_;
};

/// Malformed or invalid configuration. `line` is 0 when the problem is
/// not tied to a specific line (e.g. a cross-key invariant).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0,
              std::string key = {})
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line),
        key_(std::move(key)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace hdqkd
