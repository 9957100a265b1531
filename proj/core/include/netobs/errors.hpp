#pragma once

#include <stdexcept>
#include <string>

namespace netobs {

// Shape or size mismatch in a matrix argument.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the mathematical domain of an operation (negative
// horizon, nonsymmetric input where symmetry is required, and so on).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent experiment configuration. The message names the
// offending field by its JSON path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A gain recovery step hit a matrix whose condition number makes the result
// numerically meaningless.
class IllConditionedError : public std::runtime_error {
 public:
  explicit IllConditionedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace netobs
