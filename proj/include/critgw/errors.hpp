#ifndef CRITGW_ERRORS_HPP
#define CRITGW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace critgw {

/// Parameter outside the supported domain (e.g. Slack c > 1/(1+alpha)).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Asked for a prediction outside the regime the theory covers
/// (e.g. stationary tail with heavy immigration and beta <= alpha).
class UnsupportedRegime : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative evaluation hit its hard budget before reaching the
/// requested tolerance; carries the partial value and the bound reached.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, double partial, double tail_bound)
      : std::runtime_error(what), partial_value(partial), tail_bound(tail_bound) {}
  double partial_value;
  double tail_bound;
};

/// Not enough samples/exceedances for the requested estimate.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested coefficient accuracy unreachable for the given (radius, points).
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace critgw

#endif  // CRITGW_ERRORS_HPP
