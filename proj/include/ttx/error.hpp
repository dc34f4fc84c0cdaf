#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttx {

// Machine-readable error categories. The string form is part of the HTTP
// error body contract.
enum class ErrorCode {
  validation_error,
  phase_error,
  terminal_error,
  conflict,
  not_found,
  backend_timeout,
  backend_error,
  auth_error,
  budget_error,
  render_error,
  integrity_error,
  script_exhausted,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ttx
