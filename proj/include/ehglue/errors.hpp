#pragma once

#include <stdexcept>
#include <string>

namespace ehglue {

/// Evaluation requested where a field is not defined (origin, lattice point,
/// below the guard radius, violated precondition on inputs).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A metric that could not be inverted (or is not positive definite).
class SingularMetricError : public std::runtime_error {
 public:
  SingularMetricError(const std::string& what, double condition)
      : std::runtime_error(what + " (condition number estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration; `key` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace ehglue
