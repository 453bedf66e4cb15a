#include "foagp/error.hpp"

namespace foagp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::DegenerateKernel: return "degenerate-kernel";
    case ErrorKind::DegenerateResponse: return "degenerate-response";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::FitFailure: return "fit-failure";
    case ErrorKind::State: return "state";
    case ErrorKind::Index: return "index";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Unsupported: return "unsupported";
  }
  return "unknown";
}

bool Error::is_input_error() const noexcept {
  switch (kind_) {
    case ErrorKind::InvalidInput:
    case ErrorKind::InsufficientData:
    case ErrorKind::Shape:
    case ErrorKind::Index:
    case ErrorKind::Domain:
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Unsupported:
      return true;
    default:
      return false;
  }
}

}  // namespace foagp
