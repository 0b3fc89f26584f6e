#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irnn {

/// Operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad or missing input data (CSV contents, manifests, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value appeared during a numerical procedure.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t time_step = -1)
      : std::runtime_error(what), time_step_(time_step) {}

  /// 1-based time step where the value appeared, or -1 when not tied to a step.
  std::ptrdiff_t time_step() const noexcept { return time_step_; }

 private:
  std::ptrdiff_t time_step_;
};

/// Invalid configuration or command-line request.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace irnn
