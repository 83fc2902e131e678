#pragma once

#include <stdexcept>
#include <string>

namespace fsagp {

/// Invalid input: out-of-range coordinates, dimension mismatch, bad sizes.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization failed even after the jitter retries.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string factor, const std::string& what)
      : std::runtime_error(factor + ": " + what), factor_(std::move(factor)) {}

  const std::string& factor() const noexcept { return factor_; }

 private:
  std::string factor_;
};

/// A workspace was used with parameters other than the ones it was built from.
class StaleWorkspaceError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or inconsistent configuration; names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace fsagp
