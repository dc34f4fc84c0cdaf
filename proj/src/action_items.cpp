#include "ttx/action_items.hpp"

#include <cctype>

#include "ttx/error.hpp"

namespace ttx {

namespace {

enum class Label { none, critical, improvement, measure };

struct LabeledLine {
  Label label = Label::none;
  std::string value;
  bool list_item = false;
};

std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

// Strips "-", "*", "+", "•", "1." / "1)" list markers.
std::string_view strip_list_marker(std::string_view s, bool& was_marker) {
  was_marker = false;
  if (s.starts_with("\xE2\x80\xA2")) {
    was_marker = true;
    return trim_view(s.substr(3));
  }
  if (s.size() >= 2 && (s[0] == '-' || s[0] == '+' || s[0] == '*') && s[1] == ' ') {
    was_marker = true;
    return trim_view(s.substr(2));
  }
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i > 0 && i + 1 < s.size() && (s[i] == '.' || s[i] == ')') && s[i + 1] == ' ') {
    was_marker = true;
    return trim_view(s.substr(i + 2));
  }
  return s;
}

std::string_view skip_emphasis(std::string_view s) {
  while (!s.empty() && (s.front() == '*' || s.front() == '_')) s.remove_prefix(1);
  return s;
}

LabeledLine classify(std::string_view raw) {
  LabeledLine out;
  std::string_view s = strip_list_marker(trim_view(raw), out.list_item);
  std::string_view body = skip_emphasis(s);
  std::size_t word_end = 0;
  while (word_end < body.size() && std::isalpha(static_cast<unsigned char>(body[word_end]))) {
    ++word_end;
  }
  const std::string_view word = body.substr(0, word_end);
  std::string_view rest = body.substr(word_end);
  while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
  if (rest.empty() || rest.front() != ':') {
    out.value = std::string(s);
    return out;
  }
  rest.remove_prefix(1);
  rest = trim_view(skip_emphasis(trim_view(rest)));
  if (iequals(word, "critical")) {
    out.label = Label::critical;
  } else if (iequals(word, "improvement")) {
    out.label = Label::improvement;
  } else if (iequals(word, "measure")) {
    out.label = Label::measure;
  } else {
    out.value = std::string(s);
    return out;
  }
  out.value = std::string(rest);
  return out;
}

void append_continuation(std::string& field, std::string_view more) {
  if (!field.empty()) field.push_back(' ');
  field.append(more);
}

}  // namespace

std::string_view to_string(ActionStatus status) noexcept {
  switch (status) {
    case ActionStatus::open: return "open";
    case ActionStatus::in_progress: return "in_progress";
    case ActionStatus::done: return "done";
  }
  return "open";
}

std::optional<ActionStatus> parse_action_status(std::string_view name) noexcept {
  if (name == "open") return ActionStatus::open;
  if (name == "in_progress") return ActionStatus::in_progress;
  if (name == "done") return ActionStatus::done;
  return std::nullopt;
}

bool status_transition_allowed(ActionStatus from, ActionStatus to, bool reopen) noexcept {
  if (from == to) return true;
  if (to == ActionStatus::open) return reopen;
  return static_cast<int>(to) > static_cast<int>(from);
}

ParseResult parse_action_items(std::string_view text) {
  ParseResult result;
  struct Pending {
    ActionItem item;
    std::size_t line = 0;
    bool has_improvement = false;
  };
  std::optional<Pending> current;
  std::string* continuing = nullptr;

  auto close_current = [&] {
    if (!current) return;
    if (current->has_improvement && !current->item.improvement.empty() &&
        !current->item.finding.empty()) {
      result.items.push_back(std::move(current->item));
    } else {
      result.warnings.push_back("line " + std::to_string(current->line) +
                                ": Critical finding has no Improvement; skipped");
    }
    current.reset();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (trim_view(raw).empty()) {
      continuing = nullptr;
      continue;
    }
    const LabeledLine l = classify(raw);
    switch (l.label) {
      case Label::critical:
        close_current();
        current = Pending{};
        current->item.finding = l.value;
        current->line = line_no;
        continuing = &current->item.finding;
        break;
      case Label::improvement:
        if (!current) {
          result.warnings.push_back("line " + std::to_string(line_no) +
                                    ": Improvement without a preceding Critical; skipped");
          continuing = nullptr;
        } else if (current->has_improvement) {
          result.warnings.push_back("line " + std::to_string(line_no) +
                                    ": second Improvement for one Critical; appended");
          append_continuation(current->item.improvement, l.value);
          continuing = &current->item.improvement;
        } else {
          current->has_improvement = true;
          current->item.improvement = l.value;
          continuing = &current->item.improvement;
        }
        break;
      case Label::measure:
        if (current) {
          current->item.measurable_criterion = l.value;
          continuing = &current->item.measurable_criterion;
        } else {
          continuing = nullptr;
        }
        break;
      case Label::none: {
        // Wrapped text continues the previous labeled field; list items and
        // headings start something new.
        const bool heading = trim_view(raw).starts_with('#');
        if (continuing != nullptr && !l.list_item && !heading) {
          append_continuation(*continuing, l.value);
        } else {
          continuing = nullptr;
        }
        break;
      }
    }
  }
  close_current();
  if (result.items.empty() && result.warnings.empty()) {
    result.warnings.push_back("no Critical/Improvement blocks found");
  }
  return result;
}

std::string render_action_items(const std::vector<ActionItem>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out.push_back('\n');
    out += "Critical: " + item.finding + "\n";
    out += "Improvement: " + item.improvement + "\n";
    if (!item.measurable_criterion.empty()) {
      out += "Measure: " + item.measurable_criterion + "\n";
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const ActionItem& item) {
  j = nlohmann::json{{"item_id", item.item_id},
                     {"finding", item.finding},
                     {"improvement", item.improvement},
                     {"measurable_criterion", item.measurable_criterion},
                     {"status", to_string(item.status)},
                     {"source_session", item.source_session}};
  j["responsibility_domain"] =
      item.responsibility_domain ? nlohmann::json(*item.responsibility_domain) : nlohmann::json();
}

void from_json(const nlohmann::json& j, ActionItem& item) {
  item.item_id = j.value("item_id", std::string{});
  item.finding = j.at("finding").get<std::string>();
  item.improvement = j.at("improvement").get<std::string>();
  item.measurable_criterion = j.value("measurable_criterion", std::string{});
  const auto status = parse_action_status(j.value("status", std::string("open")));
  if (!status) fail(ErrorCode::validation_error, "unknown action item status");
  item.status = *status;
  item.source_session = j.value("source_session", std::string{});
  if (j.contains("responsibility_domain") && j["responsibility_domain"].is_string()) {
    item.responsibility_domain = j["responsibility_domain"].get<std::string>();
  } else {
    item.responsibility_domain.reset();
  }
  if (trim_view(item.finding).empty() || trim_view(item.improvement).empty()) {
    fail(ErrorCode::validation_error, "action item needs both finding and improvement");
  }
}

}  // namespace ttx
