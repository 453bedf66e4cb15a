#pragma once

#include <stdexcept>
#include <string>

namespace foagp {

enum class ErrorKind {
  InvalidInput,
  InsufficientData,
  Shape,
  DegenerateKernel,
  DegenerateResponse,
  Numerical,
  FitFailure,
  State,
  Index,
  Domain,
  Io,
  Parse,
  Unsupported,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception carrying an error category; the CLI maps categories to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for errors caused by bad user input rather than a failed computation.
  bool is_input_error() const noexcept;

 private:
  ErrorKind kind_;
};

}  // namespace foagp
