#pragma once

// Single-participant terminal exercise driver used by `ttx run`. It walks the
// workflow from Start to End, asking the facilitator backend for one message
// per response phase and reading a human answer whenever a message pauses.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ttx/action_items.hpp"
#include "ttx/backend.hpp"
#include "ttx/clock.hpp"
#include "ttx/persistence.hpp"

namespace ttx {

struct RunOptions {
  std::string domain = "Active Directory";
  std::string tooling_context;
  std::string participant_name = "Operator";
  Role role = Role::of(RoleKind::SecurityTeamMember);
  Duration time_budget = std::chrono::minutes(60);
  std::optional<std::string> session_id;  // default: next free "session-NNNN"
};

struct RunResult {
  std::string session_id;
  std::size_t facilitator_messages = 0;
  std::vector<ActionItem> action_items;  // with registry ids
  std::vector<std::string> warnings;
};

// `responses` supplies one answer per line whenever the facilitator pauses;
// blank lines are skipped. When `prompt` is given, a "> " cue is written to
// it before each read. Running out of answers while one is required raises
// validation_error.
RunResult run_exercise(const RunOptions& options, FileStore& store, FacilitatorBackend& backend,
                       const BackendConfig& config, const ClockFn& clock,
                       std::istream& responses, std::ostream& out,
                       std::ostream* prompt = nullptr);

}  // namespace ttx
