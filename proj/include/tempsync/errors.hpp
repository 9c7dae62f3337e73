#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsync {

/// Malformed input to a constructor (dimension mismatch, non-monotone breakpoints, ...).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation outside the domain a schedule or contract is defined on.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Parameter outside the range an operation accepts.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A structural hypothesis of an operation does not hold (e.g. negative weights
/// where nonnegative ones are required, or an infeasible threshold problem).
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A right-hand side produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double t, std::size_t node)
      : std::runtime_error(what), t_(t), node_(node) {}
  double time() const noexcept { return t_; }
  std::size_t node() const noexcept { return node_; }

 private:
  double t_;
  std::size_t node_;
};

/// Integration could not proceed; carries the last time with a valid state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_valid_time)
      : std::runtime_error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace tsync
