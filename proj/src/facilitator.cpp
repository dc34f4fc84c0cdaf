#include "ttx/facilitator.hpp"

#include <algorithm>

#include "ttx/error.hpp"
#include "ttx/prompts.hpp"

namespace ttx {

using nlohmann::json;

namespace {

constexpr std::string_view kContinue = "Continue the exercise.";

std::vector<Role> session_human_roles(const ExerciseSession& session) {
  auto roles = session.human_roles();
  std::erase_if(roles, [](const Role& r) { return r.kind == RoleKind::Facilitator; });
  if (roles.empty()) {
    // Before roles are assigned the participants speak for themselves.
    for (const auto& p : session.participants()) {
      if (!p.role) roles.push_back(Role::custom(p.display_name.empty() ? p.id : p.display_name));
    }
  }
  return roles;
}

const Participant& responding_participant(const ExerciseSession& session,
                                          const std::string& requested) {
  if (!requested.empty()) {
    const Participant* p = session.find_participant(requested);
    if (p == nullptr) fail(ErrorCode::not_found, "unknown participant: " + requested);
    return *p;
  }
  for (const auto& p : session.participants()) {
    if (p.role && p.role->kind != RoleKind::Facilitator) return p;
  }
  return session.participants().front();
}

std::string speaker_name(const Participant& p) {
  return p.role ? p.role->display_name() : (p.display_name.empty() ? p.id : p.display_name);
}

std::vector<std::string> addressees(const ExerciseSession& session) {
  std::vector<std::string> out;
  for (const auto& p : session.participants()) {
    if (!p.display_name.empty()) out.push_back(p.display_name);
    if (p.role) {
      out.push_back(p.role->display_name());
      out.push_back(p.role->name());
    }
  }
  out.emplace_back("you");
  return out;
}

}  // namespace

std::size_t count_events(const ExerciseSession& session, EventKind kind) {
  return static_cast<std::size_t>(std::ranges::count(session.transcript(), kind, &SessionEvent::kind));
}

std::string scenario_preamble(const ExerciseSession& session,
                              std::optional<std::uint64_t> token_limit) {
  const Scenario& sc = session.scenario();
  if (sc.scope == ScenarioScope::Micro) {
    std::string domain;
    for (const auto& d : sc.domains) {
      if (!domain.empty()) domain += " \xE2\x88\xA9 ";
      domain += d;
    }
    MicroScope scope = parse_micro_domain(domain.empty() ? sc.title : domain, sc.tooling_context);
    scope.prior_findings = sc.prior_findings;
    scope.attack_type = sc.attack_type;
    scope.inject_seeds = sc.inject_seeds;
    return build_micro_prompt(scope, token_limit);
  }
  const auto humans = session_human_roles(session);
  const auto simulated = unfilled_roles(humans);
  return build_scenario_prompt(sc, humans, simulated);
}

std::vector<ContextMessage> build_turn_context(const ExerciseSession& session,
                                               const std::optional<HumanInput>& input,
                                               std::uint64_t token_limit) {
  std::vector<ContextMessage> msgs;
  msgs.push_back({"user", scenario_preamble(session, token_limit), true});
  for (const auto& e : session.transcript()) {
    if (e.kind == EventKind::inject) {
      msgs.push_back({"assistant", e.body.value("narrative", std::string{}), false});
    } else if (e.kind == EventKind::human_response) {
      const auto pid = e.body.value("participant_id", std::string{});
      const Participant* p = session.find_participant(pid);
      const std::string speaker = p ? speaker_name(*p) : e.actor;
      msgs.push_back({"user", build_turn_prompt(speaker, e.body.value("text", std::string{})), true});
    }
  }
  if (input) {
    const auto& p = responding_participant(session, input->participant_id);
    msgs.push_back({"user", build_turn_prompt(speaker_name(p), input->text), true});
  } else if (msgs.size() > 1) {
    msgs.push_back({"user", std::string(kContinue), true});
  }
  return fit_context(msgs, token_limit);
}

FacilitatorMessage next_turn(ExerciseSession& session, const std::optional<HumanInput>& input,
                             FacilitatorBackend& backend, const BackendConfig& config,
                             Timestamp now) {
  if (session.phase() == Phase::End) {
    fail(ErrorCode::terminal_error, "session " + session.id() + " has ended");
  }
  if (session.phase() == Phase::Start) {
    fail(ErrorCode::phase_error, "advance past Start before requesting facilitator turns");
  }
  if (session.awaiting_human() && (!input || input->text.empty())) {
    fail(ErrorCode::validation_error,
         "the facilitator is waiting for a human response; human_input is required");
  }
  std::optional<std::string> responder;
  if (input) {
    if (input->text.empty()) fail(ErrorCode::validation_error, "human_input must not be empty");
    responder = responding_participant(session, input->participant_id).id;
  }

  ChatRequest request;
  request.session_id = session.id();
  for (auto& m : build_turn_context(session, input, config.token_limit)) {
    request.messages.push_back({m.role, std::move(m.text)});
  }
  request.turn_index = count_events(session, EventKind::inject);
  request.retrospective_index = count_events(session, EventKind::retrospective);
  request.addressees = addressees(session);

  FacilitatorMessage message = backend.turn(request);
  message.validate();

  // Commit on a copy so a rejected event cannot leave a half-applied turn.
  ExerciseSession next = session;
  if (input) next.record_human_response(*responder, input->text, now);
  next.record_inject(message, now);
  if (message.resolution_declared && !next.resolved() &&
      (next.phase() == Phase::IncidentAnalysis || next.phase() == Phase::ResolvedCheck)) {
    next.declare_resolution("Facilitator", "resolution marker in facilitator message", now);
  }
  session = std::move(next);
  return message;
}

RetrospectiveOutcome run_retrospective(ExerciseSession& session, FacilitatorBackend& backend,
                                       const BackendConfig& config, Timestamp now,
                                       std::optional<std::string> domain) {
  const Phase phase = session.phase();
  if (phase != Phase::Debrief && phase != Phase::UpdatePolicies && phase != Phase::End) {
    fail(ErrorCode::phase_error, "retrospective requires Debrief or later (phase is " +
                                     std::string(to_string(phase)) + ")");
  }
  RetrospectiveOutcome out;
  out.prompt = build_retrospective_prompt(session.transcript(), config.token_limit);

  ChatRequest request;
  request.session_id = session.id();
  request.messages.push_back({"user", out.prompt});
  request.turn_index = count_events(session, EventKind::inject);
  request.retrospective_index = count_events(session, EventKind::retrospective);
  out.text = backend.retrospective(request);

  out.parsed = parse_action_items(out.text);
  for (auto& item : out.parsed.items) {
    item.source_session = session.id();
    item.responsibility_domain = domain;
  }
  session.record_retrospective(out.text, now);
  return out;
}

}  // namespace ttx
