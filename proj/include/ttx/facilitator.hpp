#pragma once

// Turn brokering between an exercise session and a facilitator backend.

#include <optional>
#include <string>
#include <vector>

#include "ttx/action_items.hpp"
#include "ttx/backend.hpp"
#include "ttx/exercise.hpp"
#include "ttx/tokens.hpp"

namespace ttx {

struct HumanInput {
  std::string text;
  std::string participant_id;  // empty: the first participant holding a non-facilitator role
};

// Role-tagged context for the next backend call: the scenario preamble, the
// transcript so far, and the pending human input. Preamble and human
// responses are pinned; older facilitator narration is dropped first when
// the estimate exceeds `token_limit`.
std::vector<ContextMessage> build_turn_context(const ExerciseSession& session,
                                               const std::optional<HumanInput>& input,
                                               std::uint64_t token_limit);

// Scenario preamble for a session: the micro-tabletop prompt for micro
// scope, otherwise the full scenario prompt with unfilled roles simulated.
std::string scenario_preamble(const ExerciseSession& session,
                              std::optional<std::uint64_t> token_limit = std::nullopt);

// Asks the backend for the next facilitator message and records it.
// The backend is called before anything is appended, so a failed call leaves
// the session untouched and the turn can simply be retried.
FacilitatorMessage next_turn(ExerciseSession& session, const std::optional<HumanInput>& input,
                             FacilitatorBackend& backend, const BackendConfig& config,
                             Timestamp now);

struct RetrospectiveOutcome {
  std::string prompt;
  std::string text;
  ParseResult parsed;
};

// Builds and dispatches the retrospective prompt, records the reply as a
// retrospective event and returns the parsed action items (without ids;
// source_session and domain are filled in).
RetrospectiveOutcome run_retrospective(ExerciseSession& session, FacilitatorBackend& backend,
                                       const BackendConfig& config, Timestamp now,
                                       std::optional<std::string> domain = std::nullopt);

std::size_t count_events(const ExerciseSession& session, EventKind kind);

}  // namespace ttx
