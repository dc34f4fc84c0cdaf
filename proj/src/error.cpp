#include "ttx/error.hpp"

namespace ttx {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation_error: return "validation_error";
    case ErrorCode::phase_error: return "phase_error";
    case ErrorCode::terminal_error: return "terminal_error";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::backend_timeout: return "backend_timeout";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::auth_error: return "auth_error";
    case ErrorCode::budget_error: return "budget_error";
    case ErrorCode::render_error: return "render_error";
    case ErrorCode::integrity_error: return "integrity_error";
    case ErrorCode::script_exhausted: return "script_exhausted";
  }
  return "unknown";
}

}  // namespace ttx
