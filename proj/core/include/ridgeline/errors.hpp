#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ridgeline {

/// Error taxonomy used across the library.
///
/// Config errors are caller mistakes (bad dimensions, invalid options,
/// malformed files); Numerical errors are runtime failures of an otherwise
/// well-posed computation (divergence, non-finite values, singular solves).
/// The CLI maps them to exit codes 2 and 3 respectively.
enum class ErrorKind {
  Config,
  Numerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& message) {
  throw Error(ErrorKind::Config, message);
}

[[noreturn]] inline void throw_numerical(const std::string& message) {
  throw Error(ErrorKind::Numerical, message);
}

inline void require_config(bool condition, const std::string& message) {
  if (!condition) throw_config(message);
}

inline void require_numerical(bool condition, const std::string& message) {
  if (!condition) throw_numerical(message);
}

}  // namespace ridgeline
