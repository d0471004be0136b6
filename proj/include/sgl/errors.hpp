#pragma once

#include <stdexcept>
#include <string>

namespace sgl {

enum class ErrorKind { validation, runtime, io };

/// Base of every error thrown by the library. `code` is a short stable
/// identifier suitable for machine-readable reports.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

private:
  ErrorKind kind_;
  std::string code_;
};

class ValidationError : public Error {
public:
  ValidationError(std::string code, const std::string& message)
      : Error(ErrorKind::validation, std::move(code), message) {}
};

/// A time that does not lie on the dt lattice.
class AlignmentError : public ValidationError {
public:
  explicit AlignmentError(const std::string& message) : ValidationError("t_misaligned", message) {}
};

/// Non-finite values appeared in the solution.
class BlowUpError : public Error {
public:
  BlowUpError(double time, const std::string& message)
      : Error(ErrorKind::runtime, "blow_up", message), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

class IoError : public Error {
public:
  IoError(std::string code, const std::string& message)
      : Error(ErrorKind::io, std::move(code), message) {}
};

/// Process exit code for an error kind: 1 validation, 2 runtime, 3 I/O.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return 1;
    case ErrorKind::runtime: return 2;
    case ErrorKind::io: return 3;
  }
  return 2;
}

}  // namespace sgl
