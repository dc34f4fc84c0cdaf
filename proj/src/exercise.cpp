#include "ttx/exercise.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "ttx/error.hpp"

namespace ttx {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 10> kPhaseNames = {
    "Start",           "ScenarioPresentation", "RoleAssignment", "InitialResponse",
    "IncidentAnalysis", "ResolvedCheck",       "TimeCheck",      "Debrief",
    "UpdatePolicies",  "End",
};

constexpr std::array<std::string_view, 4> kSignalNames = {
    "proceed", "verdict=yes", "verdict=no", "check_time"};

constexpr std::array<std::string_view, 8> kEventKindNames = {
    "session_created", "inject",          "human_response",      "role_assignment",
    "phase_transition", "resolution_declared", "retrospective", "action_item"};

struct RoleName {
  RoleKind kind;
  std::string_view canonical;
  std::string_view display;
};

constexpr std::array<RoleName, 11> kRoleNames = {{
    {RoleKind::Facilitator, "Facilitator", "Facilitator"},
    {RoleKind::IncidentCommander, "IncidentCommander", "Incident Commander"},
    {RoleKind::SecurityTeamMember, "SecurityTeamMember", "Security Team Member"},
    {RoleKind::CommunicationsOfficer, "CommunicationsOfficer", "Communications Officer"},
    {RoleKind::MarketingPR, "MarketingPR", "Marketing/PR"},
    {RoleKind::LegalAdvisor, "LegalAdvisor", "Legal Advisor"},
    {RoleKind::HumanResources, "HumanResources", "Human Resources"},
    {RoleKind::SeniorLeadership, "SeniorLeadership", "Senior Leadership"},
    {RoleKind::Leadership, "Leadership", "Leadership"},
    {RoleKind::Helpdesk, "Helpdesk", "Helpdesk"},
    {RoleKind::ExternalTeam, "ExternalTeam", "External Team"},
}};

constexpr Edge kEdges[] = {
    {Phase::Start, Signal::Proceed, Phase::ScenarioPresentation},
    {Phase::ScenarioPresentation, Signal::Proceed, Phase::RoleAssignment},
    {Phase::RoleAssignment, Signal::Proceed, Phase::InitialResponse},
    {Phase::InitialResponse, Signal::Proceed, Phase::IncidentAnalysis},
    {Phase::IncidentAnalysis, Signal::Proceed, Phase::ResolvedCheck},
    {Phase::ResolvedCheck, Signal::ResolvedYes, Phase::Debrief},
    {Phase::ResolvedCheck, Signal::ResolvedNo, Phase::TimeCheck},
    {Phase::TimeCheck, Signal::CheckTime, Phase::InitialResponse},
    {Phase::TimeCheck, Signal::CheckTime, Phase::Debrief},
    {Phase::Debrief, Signal::Proceed, Phase::UpdatePolicies},
    {Phase::UpdatePolicies, Signal::Proceed, Phase::End},
};

// Lowercase alphanumerics only, so "Marketing/PR" and "marketing pr" compare equal.
std::string fold(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

bool edge_exists(Phase from, Signal signal, Phase to) {
  return std::ranges::any_of(kEdges, [&](const Edge& e) {
    return e.from == from && e.signal == signal && e.to == to;
  });
}

std::string join_signals(Phase phase) {
  std::string out;
  for (Signal s : legal_signals(phase)) {
    if (!out.empty()) out += ", ";
    out += to_string(s);
  }
  return out.empty() ? "none" : out;
}

bool accepts_facilitator_output(Phase phase) {
  return phase != Phase::Start && phase != Phase::End;
}

bool accepts_retrospective(Phase phase) {
  return phase == Phase::Debrief || phase == Phase::UpdatePolicies || phase == Phase::End;
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  return kPhaseNames[static_cast<std::size_t>(phase)];
}

std::optional<Phase> parse_phase(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Signal signal) noexcept {
  return kSignalNames[static_cast<std::size_t>(signal)];
}

std::optional<Signal> parse_signal(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kSignalNames.size(); ++i) {
    if (kSignalNames[i] == name) return static_cast<Signal>(i);
  }
  if (name == "yes" || name == "resolved") return Signal::ResolvedYes;
  if (name == "no" || name == "unresolved") return Signal::ResolvedNo;
  return std::nullopt;
}

std::vector<Signal> legal_signals(Phase phase) {
  std::vector<Signal> out;
  for (const Edge& e : kEdges) {
    if (e.from == phase && std::ranges::find(out, e.signal) == out.end()) {
      out.push_back(e.signal);
    }
  }
  return out;
}

std::span<const Edge> workflow_edges() { return kEdges; }

std::string_view to_string(EventKind kind) noexcept {
  return kEventKindNames[static_cast<std::size_t>(kind)];
}

std::optional<EventKind> parse_event_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kEventKindNames.size(); ++i) {
    if (kEventKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

std::string Role::name() const {
  if (kind == RoleKind::Custom) return label;
  return std::string(kRoleNames[static_cast<std::size_t>(kind)].canonical);
}

std::string Role::display_name() const {
  if (kind == RoleKind::Custom) return label;
  return std::string(kRoleNames[static_cast<std::size_t>(kind)].display);
}

Role parse_role(std::string_view text) {
  const std::string key = fold(text);
  for (const RoleName& r : kRoleNames) {
    if (key == fold(r.canonical)) return Role::of(r.kind);
  }
  // Common plural and abbreviated spellings.
  if (key == "securityteammembers" || key == "securityteam") {
    return Role::of(RoleKind::SecurityTeamMember);
  }
  if (key == "externalteams") return Role::of(RoleKind::ExternalTeam);
  if (key == "hr") return Role::of(RoleKind::HumanResources);
  if (key == "ic") return Role::of(RoleKind::IncidentCommander);
  return Role::custom(std::string(text));
}

// ---------------------------------------------------------------------------
// ExerciseSession

ExerciseSession ExerciseSession::create(SessionOptions options, Timestamp now) {
  if (options.participants.empty()) {
    fail(ErrorCode::validation_error, "a session needs at least one participant");
  }
  if (options.time_budget <= Duration::zero()) {
    fail(ErrorCode::validation_error, "time_budget must be positive");
  }
  if (options.session_id.empty()) {
    fail(ErrorCode::validation_error, "session_id must not be empty");
  }
  std::set<std::string> seen;
  for (auto& p : options.participants) {
    if (p.id.empty()) fail(ErrorCode::validation_error, "participant id must not be empty");
    if (!seen.insert(p.id).second) {
      fail(ErrorCode::validation_error, "duplicate participant id: " + p.id);
    }
    if (p.role) {
      fail(ErrorCode::validation_error,
           "roles are assigned during RoleAssignment, not at creation");
    }
  }

  ExerciseSession session;
  session.id_ = options.session_id;
  json body = {
      {"session_id", options.session_id},
      {"scenario", options.scenario},
      {"participants", options.participants},
      {"time_budget_ms", options.time_budget.count()},
      {"started_at", format_timestamp(now)},
  };
  session.append(now, std::string(kSystemActor), EventKind::session_created, std::move(body));
  return session;
}

ExerciseSession ExerciseSession::replay(std::span<const SessionEvent> events) {
  if (events.empty() || events.front().kind != EventKind::session_created) {
    fail(ErrorCode::integrity_error, "transcript must start with a session_created event");
  }
  ExerciseSession session;
  for (const SessionEvent& e : events) {
    try {
      session.apply(e);
    } catch (const Error& err) {
      fail(ErrorCode::integrity_error, "event " + std::to_string(e.sequence_number) +
                                           " rejected on replay: " + err.what());
    } catch (const json::exception& err) {
      fail(ErrorCode::integrity_error, "event " + std::to_string(e.sequence_number) +
                                           " has a malformed body: " + err.what());
    }
    session.transcript_.push_back(e);
  }
  return session;
}

const Participant* ExerciseSession::find_participant(std::string_view participant_id) const {
  auto it = std::ranges::find(participants_, participant_id, &Participant::id);
  return it == participants_.end() ? nullptr : &*it;
}

std::optional<std::string> ExerciseSession::facilitator_holder() const {
  for (const auto& p : participants_) {
    if (p.role && p.role->kind == RoleKind::Facilitator) return p.id;
  }
  return std::nullopt;
}

std::vector<Role> ExerciseSession::human_roles() const {
  std::vector<Role> out;
  for (const auto& p : participants_) {
    if (p.role && std::ranges::find(out, *p.role) == out.end()) out.push_back(*p.role);
  }
  return out;
}

void ExerciseSession::assign_role(std::string_view participant_id, const Role& role,
                                  Timestamp now) {
  append(now, std::string(kSystemActor), EventKind::role_assignment,
         {{"participant_id", participant_id}, {"role", role}});
}

Phase ExerciseSession::advance(Signal signal, Timestamp now) {
  if (phase_ == Phase::End) {
    fail(ErrorCode::terminal_error, "session " + id_ + " has ended; no further transitions");
  }
  const auto legal = legal_signals(phase_);
  if (std::ranges::find(legal, signal) == legal.end()) {
    fail(ErrorCode::phase_error, "signal '" + std::string(to_string(signal)) +
                                     "' is not legal in phase " +
                                     std::string(to_string(phase_)) +
                                     "; legal signals: " + join_signals(phase_));
  }
  Phase to = phase_;
  json body = {{"from", to_string(phase_)}, {"signal", to_string(signal)}};
  if (signal == Signal::CheckTime) {
    const bool remaining = time_remaining(now);
    body["time_remaining"] = remaining;
    to = remaining ? Phase::InitialResponse : Phase::Debrief;
  } else {
    for (const Edge& e : kEdges) {
      if (e.from == phase_ && e.signal == signal) to = e.to;
    }
  }
  body["to"] = to_string(to);
  append(now, std::string(kSystemActor), EventKind::phase_transition, std::move(body));
  return phase_;
}

void ExerciseSession::record_inject(const json& body, Timestamp now) {
  append(now, "Facilitator", EventKind::inject, body);
}

void ExerciseSession::record_human_response(std::string_view participant_id,
                                            std::string_view text, Timestamp now) {
  const Participant* p = find_participant(participant_id);
  if (p == nullptr) {
    fail(ErrorCode::not_found, "unknown participant: " + std::string(participant_id));
  }
  const std::string actor = p->role ? p->role->name() : p->id;
  append(now, actor, EventKind::human_response,
         {{"participant_id", participant_id}, {"text", text}});
}

void ExerciseSession::declare_resolution(std::string_view actor, std::string_view note,
                                         Timestamp now) {
  append(now, std::string(actor), EventKind::resolution_declared, {{"note", note}});
}

void ExerciseSession::record_retrospective(std::string_view text, Timestamp now) {
  append(now, "Facilitator", EventKind::retrospective, {{"text", text}});
}

void ExerciseSession::record_action_item(const json& item, Timestamp now) {
  append(now, "Facilitator", EventKind::action_item, item);
}

void ExerciseSession::append(Timestamp now, std::string actor, EventKind kind, json body) {
  SessionEvent event{transcript_.size() + 1, now, phase_, std::move(actor), kind,
                     std::move(body)};
  // Transitions are stamped with the phase they enter so every visited phase
  // owns at least one event.
  if (kind == EventKind::phase_transition) {
    event.phase = *parse_phase(event.body.at("to").get<std::string>());
  }
  apply(event);
  transcript_.push_back(std::move(event));
}

// Single validation path shared by live operations and replay.
void ExerciseSession::apply(const SessionEvent& e) {
  if (e.sequence_number != transcript_.size() + 1) {
    fail(ErrorCode::integrity_error,
         "sequence gap: expected " + std::to_string(transcript_.size() + 1) + ", found " +
             std::to_string(e.sequence_number));
  }
  const bool is_transition = e.kind == EventKind::phase_transition;
  if (!transcript_.empty() && !is_transition && e.phase != phase_) {
    fail(ErrorCode::integrity_error, "event phase " + std::string(to_string(e.phase)) +
                                         " does not match session phase " +
                                         std::string(to_string(phase_)));
  }

  switch (e.kind) {
    case EventKind::session_created: {
      if (!transcript_.empty()) {
        fail(ErrorCode::integrity_error, "session_created may only be the first event");
      }
      const json& b = e.body;
      id_ = b.at("session_id").get<std::string>();
      scenario_ = b.at("scenario").get<Scenario>();
      participants_ = b.at("participants").get<std::vector<Participant>>();
      time_budget_ = Duration(b.at("time_budget_ms").get<long long>());
      started_at_ = parse_timestamp(b.at("started_at").get<std::string>());
      if (participants_.empty() || time_budget_ <= Duration::zero()) {
        fail(ErrorCode::integrity_error, "creation event violates session preconditions");
      }
      phase_ = Phase::Start;
      break;
    }
    case EventKind::role_assignment: {
      if (phase_ != Phase::RoleAssignment) {
        fail(ErrorCode::phase_error, "roles can only be assigned during RoleAssignment (phase is " +
                                         std::string(to_string(phase_)) + ")");
      }
      const auto pid = e.body.at("participant_id").get<std::string>();
      const Role role = e.body.at("role").get<Role>();
      auto it = std::ranges::find(participants_, pid, &Participant::id);
      if (it == participants_.end()) fail(ErrorCode::not_found, "unknown participant: " + pid);
      if (role.kind == RoleKind::Custom && role.label.empty()) {
        fail(ErrorCode::validation_error, "custom role needs a label");
      }
      if (role.kind == RoleKind::Facilitator) {
        auto holder = facilitator_holder();
        if (holder && *holder != pid) {
          fail(ErrorCode::conflict, "Facilitator role already held by " + *holder);
        }
      }
      it->role = role;
      break;
    }
    case EventKind::phase_transition: {
      if (phase_ == Phase::End) fail(ErrorCode::terminal_error, "session has ended");
      const auto from = parse_phase(e.body.at("from").get<std::string>());
      const auto to = parse_phase(e.body.at("to").get<std::string>());
      const auto signal = parse_signal(e.body.at("signal").get<std::string>());
      if (!from || !to || !signal || *from != phase_ || e.phase != *to ||
          !edge_exists(*from, *signal, *to)) {
        fail(ErrorCode::integrity_error, "transition is not a workflow edge");
      }
      if (*signal == Signal::ResolvedYes) resolved_ = true;
      phase_ = *to;
      break;
    }
    case EventKind::inject: {
      if (!accepts_facilitator_output(phase_)) {
        fail(ErrorCode::phase_error,
             "facilitator output is not accepted in phase " + std::string(to_string(phase_)));
      }
      if (e.body.value("narrative", std::string{}).empty()) {
        fail(ErrorCode::validation_error, "inject narrative must not be empty");
      }
      awaiting_human_ = e.body.value("pause_requested", false);
      break;
    }
    case EventKind::human_response: {
      if (!accepts_facilitator_output(phase_)) {
        fail(ErrorCode::phase_error,
             "responses are not accepted in phase " + std::string(to_string(phase_)));
      }
      const auto pid = e.body.at("participant_id").get<std::string>();
      if (find_participant(pid) == nullptr) {
        fail(ErrorCode::not_found, "unknown participant: " + pid);
      }
      awaiting_human_ = false;
      break;
    }
    case EventKind::resolution_declared: {
      if (phase_ != Phase::IncidentAnalysis && phase_ != Phase::ResolvedCheck) {
        fail(ErrorCode::phase_error,
             "resolution can only be declared during IncidentAnalysis or ResolvedCheck");
      }
      if (resolved_) fail(ErrorCode::conflict, "resolution was already declared");
      resolved_ = true;
      break;
    }
    case EventKind::retrospective:
    case EventKind::action_item: {
      if (!accepts_retrospective(phase_)) {
        fail(ErrorCode::phase_error, "retrospective artifacts require Debrief or later (phase is " +
                                         std::string(to_string(phase_)) + ")");
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const Role& role) { j = role.name(); }

void from_json(const json& j, Role& role) { role = parse_role(j.get<std::string>()); }

namespace {

std::string_view scope_name(ScenarioScope s) { return s == ScenarioScope::Micro ? "micro" : "full"; }

}  // namespace

void to_json(json& j, const Scenario& s) {
  j = json{{"id", s.id},
           {"title", s.title},
           {"organization", s.organization},
           {"attack_type", s.attack_type},
           {"scope", scope_name(s.scope)},
           {"domains", s.domains},
           {"inject_seeds", s.inject_seeds},
           {"prior_findings", s.prior_findings},
           {"tooling_context", s.tooling_context}};
}

void from_json(const json& j, Scenario& s) {
  s.id = j.value("id", std::string{});
  s.title = j.value("title", std::string{});
  s.organization = j.value("organization", std::string{});
  s.attack_type = j.value("attack_type", std::string{});
  const auto scope = j.value("scope", std::string("full"));
  if (scope == "micro") {
    s.scope = ScenarioScope::Micro;
  } else if (scope == "full") {
    s.scope = ScenarioScope::Full;
  } else {
    fail(ErrorCode::validation_error, "scenario scope must be 'full' or 'micro'");
  }
  s.domains = j.value("domains", std::vector<std::string>{});
  s.inject_seeds = j.value("inject_seeds", std::vector<std::string>{});
  s.prior_findings = j.value("prior_findings", std::string{});
  s.tooling_context = j.value("tooling_context", std::string{});
}

void to_json(json& j, const Participant& p) {
  j = json{{"id", p.id}, {"display_name", p.display_name}};
  j["role"] = p.role ? json(*p.role) : json(nullptr);
}

void from_json(const json& j, Participant& p) {
  p.id = j.at("id").get<std::string>();
  p.display_name = j.value("display_name", p.id);
  if (j.contains("role") && !j.at("role").is_null()) {
    p.role = j.at("role").get<Role>();
  } else {
    p.role.reset();
  }
}

void to_json(json& j, const SessionEvent& e) {
  j = json{{"seq", e.sequence_number},
           {"ts", format_timestamp(e.timestamp)},
           {"phase", to_string(e.phase)},
           {"actor", e.actor},
           {"kind", to_string(e.kind)},
           {"body", e.body}};
}

void from_json(const json& j, SessionEvent& e) {
  e.sequence_number = j.at("seq").get<std::uint64_t>();
  e.timestamp = parse_timestamp(j.at("ts").get<std::string>());
  const auto phase = parse_phase(j.at("phase").get<std::string>());
  const auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!phase || !kind) fail(ErrorCode::validation_error, "unknown phase or event kind");
  e.phase = *phase;
  e.kind = *kind;
  e.actor = j.at("actor").get<std::string>();
  e.body = j.at("body");
}

json session_summary(const ExerciseSession& s, Timestamp now) {
  json signals = json::array();
  for (Signal sig : legal_signals(s.phase())) signals.push_back(to_string(sig));
  const auto remaining = std::max(Duration::zero(), s.cutoff() - now);
  json j = {
      {"session_id", s.id()},
      {"phase", to_string(s.phase())},
      {"scenario", s.scenario()},
      {"participants", s.participants()},
      {"started_at", format_timestamp(s.started_at())},
      {"time_budget_ms", s.time_budget().count()},
      {"time_remaining_ms", remaining.count()},
      {"resolved", s.resolved()},
      {"awaiting_human", s.awaiting_human()},
      {"legal_signals", signals},
      {"transcript_ref", s.transcript_ref()},
      {"last_sequence", s.last_sequence()},
  };
  const auto holder = s.facilitator_holder();
  j["facilitator"] = holder ? json(*holder) : json("backend");
  return j;
}

}  // namespace ttx
