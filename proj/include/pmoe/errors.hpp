#pragma once

#include <stdexcept>
#include <string>

namespace pmoe {

// Shapes do not conform (matmul inner dims, loss operands, checkpoint payloads).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of an operation (empty softmax, K = 0, non-finite Gram entries).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation called in the wrong state, e.g. backward twice on the same root.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pmoe

namespace pmoe {

// Invalid configuration value; field() is the key path of the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace pmoe
