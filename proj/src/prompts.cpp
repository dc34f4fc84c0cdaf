#include "ttx/prompts.hpp"

#include <algorithm>

#include "ttx/error.hpp"
#include "ttx/tokens.hpp"

namespace ttx {

namespace {

constexpr std::string_view kScenarioText =
    R"(Act as the moderator of a live security tabletop exercise that runs now, turn by turn. Whenever a human participant must answer, stop and wait for that answer before going on.
Scenario: {{attack_type}} at {{organization}}.{{#title}} Exercise title: {{title}}.{{/title}}
Reveal the situation in stages, add new facts as they would surface, and request a decision or action from the team at every stage.
Human participants: {{human_roles}}.
{{#simulated_roles}}Nobody is playing these roles, so simulate them yourself and report their updates in their own voice when relevant: {{simulated_roles}}.
{{/simulated_roles}}{{#inject_seeds}}Work these developments into the scenario when they fit:
{{inject_seeds}}
{{/inject_seeds}}{{#prior_findings}}Earlier exercises produced these findings. Probe whether they have been addressed:
{{prior_findings}}
{{/prior_findings}}Aim to surface gaps in tools, plans and skills while the team decides on its response, and collect concrete improvements along the way.
When you need a decision, end your turn with a question addressed to a human participant by role. When the incident is fully resolved, write INCIDENT RESOLVED on a line of its own.)";

constexpr std::string_view kMicroText =
    R"(Act as the moderator of a tabletop exercise centred on {{domain}}. Ask me about the tools, product versions and configuration we really run so the scenario fits our environment.
{{#shared_components}}This is a cross-team exercise covering the integration between {{systems}}. Shared responsibility: {{shared_components}}.
{{/shared_components}}{{#attack_type}}Base the scenario on: {{attack_type}}.
{{/attack_type}}{{#inject_seeds}}Work these developments into the scenario when they fit:
{{inject_seeds}}
{{/inject_seeds}}{{#tooling_context}}Environment notes:
{{tooling_context}}
{{/tooling_context}}{{#prior_findings}}Earlier exercises produced these findings. Probe whether they have been addressed:
{{prior_findings}}
{{/prior_findings}}When you need a decision or information from me, end your turn with a question. When the incident is fully resolved, write INCIDENT RESOLVED on a line of its own.)";

constexpr std::string_view kRetrospectiveText =
    R"(Review the answers we gave during this exercise and judge them strictly. Concentrate on anything that would let an attacker keep access or come back later.
Report each finding as labeled lines at the start of a line:
Critical: what went wrong or was missing
Improvement: the specific change to make
Measure: how completion can be verified (optional)

Exercise transcript:
{{transcript}})";

constexpr std::string_view kTurnText = R"({{speaker}}: {{response}})";

// Appends the rendering of `text` to `out`, recursing into sections.
void render_range(std::string_view text, const SlotValues& values, std::string& out) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      return;
    }
    out.append(text.substr(pos, open - pos));
    const auto close = text.find("}}", open);
    if (close == std::string_view::npos) fail(ErrorCode::render_error, "unterminated placeholder");
    const std::string_view tag = text.substr(open + 2, close - open - 2);
    if (!tag.empty() && tag.front() == '#') {
      const std::string name(tag.substr(1));
      const std::string end_tag = "{{/" + name + "}}";
      const auto end = text.find(end_tag, close + 2);
      if (end == std::string_view::npos) {
        fail(ErrorCode::render_error, "section '" + name + "' is never closed");
      }
      auto it = values.find(name);
      if (it != values.end() && !it->second.empty()) {
        render_range(text.substr(close + 2, end - close - 2), values, out);
      }
      pos = end + end_tag.size();
      continue;
    }
    if (!tag.empty() && tag.front() == '/') {
      fail(ErrorCode::render_error, "unexpected section close '" + std::string(tag) + "'");
    }
    auto it = values.find(tag);
    if (it != values.end()) out.append(it->second);
    pos = close + 2;
  }
}

std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out.append(sep);
    out.append(s);
  }
  return out;
}

std::string role_list(std::span<const Role> roles) {
  std::vector<std::string> names;
  for (const auto& r : roles) names.push_back(r.display_name());
  return join(names, ", ");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    if (!trim(line).empty()) out.emplace_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::string bullet_lines(std::span<const std::string> items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out.push_back('\n');
    out += "- " + s;
  }
  return out;
}

}  // namespace

std::string_view to_string(PromptKind kind) noexcept {
  switch (kind) {
    case PromptKind::scenario_instantiation: return "scenario_instantiation";
    case PromptKind::micro_tabletop: return "micro_tabletop";
    case PromptKind::retrospective: return "retrospective";
    case PromptKind::turn_continuation: return "turn_continuation";
  }
  return "unknown";
}

PromptTemplate::PromptTemplate(PromptKind kind, std::string text,
                               std::vector<std::string> required_slots)
    : kind_(kind), text_(std::move(text)), required_(std::move(required_slots)) {
  // Dry render with every slot filled catches malformed sections early.
  SlotValues probe;
  for (const auto& s : slots()) probe[s] = "x";
  std::string scratch;
  render_range(text_, probe, scratch);
  const auto used = slots();
  for (const auto& r : required_) {
    if (std::ranges::find(used, r) == used.end()) {
      fail(ErrorCode::render_error, "required slot '" + r + "' does not appear in template");
    }
  }
}

std::vector<std::string> PromptTemplate::slots() const {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text_.find("{{", pos)) != std::string::npos) {
    const auto close = text_.find("}}", pos);
    if (close == std::string::npos) break;
    std::string tag = text_.substr(pos + 2, close - pos - 2);
    if (!tag.empty() && (tag.front() == '#' || tag.front() == '/')) tag.erase(0, 1);
    if (std::ranges::find(out, tag) == out.end()) out.push_back(tag);
    pos = close + 2;
  }
  return out;
}

std::string PromptTemplate::render(const SlotValues& values) const {
  for (const auto& r : required_) {
    auto it = values.find(r);
    if (it == values.end() || trim(it->second).empty()) {
      fail(ErrorCode::render_error, std::string(to_string(kind_)) + " prompt: required slot '" +
                                        r + "' is not filled");
    }
  }
  std::string out;
  render_range(text_, values, out);
  return out;
}

const PromptTemplate& PromptTemplate::builtin(PromptKind kind) {
  static const PromptTemplate scenario(PromptKind::scenario_instantiation,
                                       std::string(kScenarioText),
                                       {"attack_type", "organization", "human_roles"});
  static const PromptTemplate micro(PromptKind::micro_tabletop, std::string(kMicroText),
                                    {"domain"});
  static const PromptTemplate retro(PromptKind::retrospective, std::string(kRetrospectiveText),
                                    {"transcript"});
  static const PromptTemplate turn(PromptKind::turn_continuation, std::string(kTurnText),
                                   {"speaker", "response"});
  switch (kind) {
    case PromptKind::scenario_instantiation: return scenario;
    case PromptKind::micro_tabletop: return micro;
    case PromptKind::retrospective: return retro;
    case PromptKind::turn_continuation: return turn;
  }
  return scenario;
}

std::vector<Role> unfilled_roles(std::span<const Role> human_roles) {
  std::vector<Role> out;
  for (int k = static_cast<int>(RoleKind::IncidentCommander);
       k <= static_cast<int>(RoleKind::ExternalTeam); ++k) {
    const Role r = Role::of(static_cast<RoleKind>(k));
    if (std::ranges::find(human_roles, r) == human_roles.end()) out.push_back(r);
  }
  return out;
}

std::string build_scenario_prompt(const Scenario& scenario, std::span<const Role> human_roles,
                                  std::span<const Role> simulated_roles) {
  if (human_roles.empty()) {
    fail(ErrorCode::validation_error, "a scenario prompt needs at least one human role");
  }
  SlotValues v{
      {"attack_type", scenario.attack_type},
      {"organization", scenario.organization},
      {"title", scenario.title},
      {"human_roles", role_list(human_roles)},
      {"simulated_roles", role_list(simulated_roles)},
      {"inject_seeds", bullet_lines(scenario.inject_seeds)},
      {"prior_findings", trim(scenario.prior_findings)},
  };
  return PromptTemplate::builtin(PromptKind::scenario_instantiation).render(v);
}

MicroScope parse_micro_domain(std::string_view domain, std::string_view tooling_context) {
  MicroScope scope;
  std::string rest(domain);
  for (std::string_view sep : {"\xE2\x88\xA9", "&"}) {  // U+2229 INTERSECTION
    std::size_t pos;
    while ((pos = rest.find(sep)) != std::string::npos) {
      scope.systems.push_back(trim(rest.substr(0, pos)));
      rest.erase(0, pos + sep.size());
    }
  }
  scope.systems.push_back(trim(rest));
  std::erase_if(scope.systems, [](const std::string& s) { return s.empty(); });
  scope.tooling_context = std::string(tooling_context);
  return scope;
}

std::string build_micro_prompt(const MicroScope& scope, std::optional<std::uint64_t> token_limit) {
  if (scope.systems.empty()) {
    fail(ErrorCode::validation_error, "a micro-tabletop needs a responsibility domain");
  }
  std::string domain;
  if (scope.systems.size() == 1) {
    domain = scope.systems.front();
  } else {
    domain = "the intersection of " + join(scope.systems, " and ");
  }
  std::string shared = join(scope.shared_components, ", ");
  if (shared.empty() && scope.systems.size() > 1) shared = "components used by both teams";

  SlotValues v{
      {"domain", domain},
      {"systems", join(scope.systems, " and ")},
      {"shared_components", shared},
      {"prior_findings", trim(scope.prior_findings)},
      {"attack_type", trim(scope.attack_type)},
      {"inject_seeds", bullet_lines(scope.inject_seeds)},
  };
  const auto& tmpl = PromptTemplate::builtin(PromptKind::micro_tabletop);
  auto lines = split_lines(scope.tooling_context);
  if (token_limit && !lines.empty()) {
    // The rendered prompt minus tooling lines is the pinned preamble.
    std::vector<ContextMessage> msgs{{"user", tmpl.render(v) + "\nEnvironment notes:", true}};
    for (auto& l : lines) msgs.push_back({"user", l, false});
    auto kept = fit_context(msgs, *token_limit);
    lines.clear();
    for (std::size_t i = 1; i < kept.size(); ++i) lines.push_back(kept[i].text);
  } else if (token_limit && estimate_tokens(tmpl.render(v)) > *token_limit) {
    fail(ErrorCode::budget_error, "micro-tabletop instructions exceed the token limit");
  }
  std::string tooling;
  for (const auto& l : lines) {
    if (!tooling.empty()) tooling.push_back('\n');
    tooling += l;
  }
  v["tooling_context"] = tooling;
  return tmpl.render(v);
}

std::string build_micro_prompt(std::string_view domain, std::string_view tooling_context,
                               std::optional<std::uint64_t> token_limit) {
  if (trim(domain).empty()) {
    fail(ErrorCode::validation_error, "responsibility domain must not be empty");
  }
  return build_micro_prompt(parse_micro_domain(domain, tooling_context), token_limit);
}

std::string build_retrospective_prompt(std::span<const SessionEvent> transcript,
                                       std::optional<std::uint64_t> token_limit) {
  std::vector<ContextMessage> lines;
  bool any_human = false;
  for (const auto& e : transcript) {
    if (e.kind == EventKind::human_response) {
      any_human = true;
      lines.push_back({"user", "[" + e.actor + "] " + e.body.value("text", std::string{}), true});
    } else if (e.kind == EventKind::inject) {
      lines.push_back(
          {"assistant", "[Facilitator] " + e.body.value("narrative", std::string{}), false});
    }
  }
  if (!any_human) {
    fail(ErrorCode::validation_error, "nothing to critique: transcript has no human responses");
  }
  const auto& tmpl = PromptTemplate::builtin(PromptKind::retrospective);
  if (token_limit) {
    // Instructions are pinned alongside the human responses.
    std::vector<ContextMessage> msgs{{"user", tmpl.render({{"transcript", "-"}}), true}};
    msgs.insert(msgs.end(), lines.begin(), lines.end());
    auto kept = fit_context(msgs, *token_limit);
    lines.assign(kept.begin() + 1, kept.end());
  }
  std::string body;
  for (const auto& l : lines) {
    if (!body.empty()) body.push_back('\n');
    body += l.text;
  }
  return tmpl.render({{"transcript", body}});
}

std::string build_turn_prompt(std::string_view speaker, std::string_view response) {
  return PromptTemplate::builtin(PromptKind::turn_continuation)
      .render({{"speaker", std::string(speaker)}, {"response", std::string(response)}});
}

}  // namespace ttx
