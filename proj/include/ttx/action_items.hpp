#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ttx {

enum class ActionStatus : std::uint8_t { open, in_progress, done };

std::string_view to_string(ActionStatus status) noexcept;
std::optional<ActionStatus> parse_action_status(std::string_view name) noexcept;

// Forward moves (open -> in_progress -> done, or open -> done) are always
// allowed; moving back to open requires `reopen`. Same-status writes are
// accepted as no-ops.
bool status_transition_allowed(ActionStatus from, ActionStatus to, bool reopen) noexcept;

struct ActionItem {
  std::string item_id;
  std::string finding;      // the "Critical" observation
  std::string improvement;  // the recommended change
  std::string measurable_criterion;
  std::optional<std::string> responsibility_domain;
  ActionStatus status = ActionStatus::open;
  std::string source_session;

  friend bool operator==(const ActionItem&, const ActionItem&) = default;
};

struct ParseResult {
  std::vector<ActionItem> items;
  std::vector<std::string> warnings;
};

// Pairs "Critical:" and "Improvement:" labels found at line start (after
// list markers and markdown emphasis). "Measure:" optionally fills the
// measurable criterion of the current pair. A Critical without an
// Improvement is reported as a warning, not an item.
ParseResult parse_action_items(std::string_view retrospective_text);

// Inverse of parse_action_items for the labeled fields.
std::string render_action_items(const std::vector<ActionItem>& items);

void to_json(nlohmann::json& j, const ActionItem& item);
void from_json(const nlohmann::json& j, ActionItem& item);

}  // namespace ttx
