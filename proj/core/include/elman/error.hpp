#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace elman {

enum class ErrorKind {
  InvalidInput,
  NotPositiveDefinite,
  NoConvergence,
  DomainViolation,
  TruncationInsufficient,
  BudgetExceeded,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every recoverable failure in the library. `residual` is NaN unless the
/// failing routine had a meaningful final residual to report.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double residual = std::numeric_limits<double>::quiet_NaN());

  ErrorKind kind() const noexcept { return kind_; }
  double residual() const noexcept { return residual_; }

 private:
  ErrorKind kind_;
  double residual_;
};

}  // namespace elman
