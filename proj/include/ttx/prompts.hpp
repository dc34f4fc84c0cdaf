#pragma once

// Prompt protocols sent to the facilitator backend. Templates use {{slot}}
// placeholders and {{#slot}}...{{/slot}} sections that render only when the
// slot is non-empty.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttx/exercise.hpp"

namespace ttx {

enum class PromptKind : std::uint8_t {
  scenario_instantiation,
  micro_tabletop,
  retrospective,
  turn_continuation,
};

std::string_view to_string(PromptKind kind) noexcept;

using SlotValues = std::map<std::string, std::string, std::less<>>;

class PromptTemplate {
 public:
  // Throws render_error on unbalanced sections or on a required slot that
  // never appears in the text.
  PromptTemplate(PromptKind kind, std::string text, std::vector<std::string> required_slots);

  PromptKind kind() const noexcept { return kind_; }
  const std::string& text() const noexcept { return text_; }
  const std::vector<std::string>& required_slots() const noexcept { return required_; }
  // Every slot name referenced by the template, in first-use order.
  std::vector<std::string> slots() const;

  // Fails with render_error naming the slot when a required slot is missing
  // or empty. Optional slots that are absent render as empty text.
  std::string render(const SlotValues& values) const;

  static const PromptTemplate& builtin(PromptKind kind);

 private:
  PromptKind kind_;
  std::string text_;
  std::vector<std::string> required_;
};

// Sentinels the prompts ask a live model to use. The mock script may also
// embed them instead of setting flags.
inline constexpr std::string_view kResolutionSentinel = "INCIDENT RESOLVED";
inline constexpr std::string_view kPauseSentinel = "[PAUSE]";

std::string build_scenario_prompt(const Scenario& scenario, std::span<const Role> human_roles,
                                  std::span<const Role> simulated_roles);

// Standard roles a model may voice when nobody holds them.
std::vector<Role> unfilled_roles(std::span<const Role> human_roles);

struct MicroScope {
  std::vector<std::string> systems;            // one for a single domain, two for cross-team
  std::vector<std::string> shared_components;  // components under shared responsibility
  std::string tooling_context;
  std::string prior_findings;
  std::string attack_type;
  std::vector<std::string> inject_seeds;
};

// A domain written as "A ∩ B" (or "A & B") is treated as a cross-team scope
// over both systems.
MicroScope parse_micro_domain(std::string_view domain, std::string_view tooling_context);

// When `token_limit` is given, tooling-context lines are dropped oldest first
// until the prompt fits; the fixed instructions are never trimmed.
std::string build_micro_prompt(const MicroScope& scope,
                               std::optional<std::uint64_t> token_limit = std::nullopt);
std::string build_micro_prompt(std::string_view domain, std::string_view tooling_context,
                               std::optional<std::uint64_t> token_limit = std::nullopt);

// Human responses are always quoted; facilitator narration is elided oldest
// first when a token limit is given.
std::string build_retrospective_prompt(std::span<const SessionEvent> transcript,
                                       std::optional<std::uint64_t> token_limit = std::nullopt);

std::string build_turn_prompt(std::string_view speaker, std::string_view response);

}  // namespace ttx
