#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ssm {

// Invalid distribution or algorithm parameter (non-positive rate, bad range, ...).
class InvalidParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A weight vector carries no usable mass (all entries zero or NaN).
class DegenerateWeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every particle of a filter fell off the observation support.
class FilterDegenerateError : public std::runtime_error {
 public:
  FilterDegenerateError(std::string msg, std::vector<double> theta, int t)
      : std::runtime_error(std::move(msg)), theta(std::move(theta)), t(t) {}
  std::vector<double> theta;
  int t;
};

// An observation violates the model's structural constraints.
class InvalidObservationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full trajectories were requested from a filter that did not store them.
class NotStoredError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A linear-algebra step failed (singular innovation covariance, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad experiment configuration or input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssm
