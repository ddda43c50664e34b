#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvpmcmc {

enum class ErrorKind {
  Config,       // malformed or inconsistent configuration
  Domain,       // argument outside the mathematical domain of an operation
  Numeric,      // overflow, blow-up, singular matrices
  Degeneracy,   // weight collapse or empty sample sets
};

/// Exit code used by the command line front end for each error category.
constexpr int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Domain:
      return 2;
    case ErrorKind::Numeric:
      return 3;
    case ErrorKind::Degeneracy:
      return 4;
  }
  return 1;
}

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return "config";
    case ErrorKind::Domain:
      return "domain";
    case ErrorKind::Numeric:
      return "numeric";
    case ErrorKind::Degeneracy:
      return "degeneracy";
  }
  return "unknown";
}

/// Structured failure. `code` is a short machine-readable tag such as
/// "numeric blow-up" or "total weight collapse"; `index` carries the particle
/// index or time step the failure refers to, or -1 when not applicable.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& detail, long index = -1)
      : std::runtime_error(code + ": " + detail), kind_(kind), code_(std::move(code)), index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }
  long index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::string code_;
  long index_;
};

}  // namespace mvpmcmc
