#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace esnoc {

/// A state, derivative or control value became NaN/inf.
class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(const std::string& what, double t, std::vector<double> state)
      : std::runtime_error(what), time(t), state(std::move(state)) {}
  double time;
  std::vector<double> state;
};

/// g(x)^2 fell below the declared floor xi1 along a simulated trajectory.
class GainFloorViolation : public std::runtime_error {
 public:
  GainFloorViolation(const std::string& what, double t, std::vector<double> state)
      : std::runtime_error(what), time(t), state(std::move(state)) {}
  double time;
  std::vector<double> state;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration text or an unknown identifier.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace esnoc
