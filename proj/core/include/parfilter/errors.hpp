#pragma once

#include <stdexcept>
#include <string>

namespace parfilter {

// Inputs failed structural checks: bad dimensions, out-of-range parameters,
// malformed files. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric routine could not deliver a trustworthy result: non-finite
// intermediates, failed internal consistency checks. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// The requested analysis mode contradicts the supplied settings, e.g. an
// estimator that needs lambda < 1 combined with lambda = 1, or weight
// training that voids the error guarantee of the chosen mode. CLI exit code 4.
class ModeMismatchError : public std::runtime_error {
 public:
  explicit ModeMismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace parfilter
