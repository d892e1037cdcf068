#pragma once

#include <stdexcept>
#include <string>

namespace iongate {

// Invalid or inconsistent user input. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Propagation gave up (step underflow, step budget, non-finite state).
// Maps to CLI exit code 3.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Function evaluated outside its domain (e.g. a negative Bose exponent).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero-energy radial solution cannot be matched because a bound state is
// crossing threshold between the bracketing parameters.
class ResonanceError : public std::runtime_error {
 public:
  ResonanceError(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_, hi_;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iongate
