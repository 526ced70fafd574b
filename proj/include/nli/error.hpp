#pragma once

#include <stdexcept>
#include <string>

namespace nli {

// Invalid physical description or job configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation that has no meaningful answer for its input
// (zero-norm spectrum, rank-deficient fit, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nli
