#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nqs {

enum class ErrorKind {
  dimension,
  faithfulness,
  non_primitive,
  invalid_generator,
  invalid_perturbation,
  domain,
  evaluation,
  support,
  field,
  degenerate_spec,
  non_convergence,
  loop,
  degenerate_cartan,
  unsupported_divergence,
  validation,
};

/// Stable identifier used in reports, e.g. "non_primitive".
std::string_view to_string(ErrorKind kind) noexcept;

/// The single exception type thrown by the library. `kind()` is the
/// machine-readable category; `what()` carries the human detail.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Error that also carries the last residual of a failed iteration.
class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string& message, double last_residual)
      : Error(ErrorKind::non_convergence, message), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

private:
  double last_residual_;
};

}  // namespace nqs
