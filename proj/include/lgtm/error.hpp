#pragma once

#include <stdexcept>
#include <string>

namespace lgtm {

/// Failure categories. Each maps to one CLI exit code and one HTTP status family.
enum class ErrorKind {
  invalid_argument,  // exit 2
  io,                // exit 1
  data_contract,     // exit 3
  backend,           // exit 4
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& m) : Error(ErrorKind::invalid_argument, m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

/// Inputs are individually well formed but inconsistent with each other
/// (dimension mismatch, truncated payload, ...).
struct ContractError : Error {
  explicit ContractError(const std::string& m) : Error(ErrorKind::data_contract, m) {}
};

struct BackendError : Error {
  explicit BackendError(const std::string& m) : Error(ErrorKind::backend, m) {}
};

inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return 1;
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::data_contract: return 3;
    case ErrorKind::backend: return 4;
  }
  return 1;
}

}  // namespace lgtm
