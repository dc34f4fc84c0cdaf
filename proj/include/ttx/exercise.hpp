#pragma once

// Exercise session lifecycle: the tabletop workflow state machine, role
// assignment and the append-only transcript that backs every session.

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttx/clock.hpp"

namespace ttx {

enum class Phase : std::uint8_t {
  Start,
  ScenarioPresentation,
  RoleAssignment,
  InitialResponse,
  IncidentAnalysis,
  ResolvedCheck,
  TimeCheck,
  Debrief,
  UpdatePolicies,
  End,
};

inline constexpr std::array<Phase, 10> kAllPhases = {
    Phase::Start,           Phase::ScenarioPresentation, Phase::RoleAssignment,
    Phase::InitialResponse, Phase::IncidentAnalysis,     Phase::ResolvedCheck,
    Phase::TimeCheck,       Phase::Debrief,              Phase::UpdatePolicies,
    Phase::End,
};

std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> parse_phase(std::string_view name) noexcept;

// Inputs that move a session along one workflow edge. `CheckTime` is the only
// signal accepted at TimeCheck; the branch taken depends on the clock.
enum class Signal : std::uint8_t {
  Proceed,
  ResolvedYes,
  ResolvedNo,
  CheckTime,
};

inline constexpr std::array<Signal, 4> kAllSignals = {
    Signal::Proceed, Signal::ResolvedYes, Signal::ResolvedNo, Signal::CheckTime};

std::string_view to_string(Signal signal) noexcept;
std::optional<Signal> parse_signal(std::string_view name) noexcept;

std::vector<Signal> legal_signals(Phase phase);

struct Edge {
  Phase from;
  Signal signal;
  Phase to;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Every edge of the workflow graph. TimeCheck contributes two edges under
// CheckTime: time remaining loops back to InitialResponse, exhausted time
// goes to Debrief.
std::span<const Edge> workflow_edges();

enum class RoleKind : std::uint8_t {
  Facilitator,
  IncidentCommander,
  SecurityTeamMember,
  CommunicationsOfficer,
  MarketingPR,
  LegalAdvisor,
  HumanResources,
  SeniorLeadership,
  Leadership,
  Helpdesk,
  ExternalTeam,
  Custom,
};

struct Role {
  RoleKind kind = RoleKind::Custom;
  std::string label;  // only meaningful for RoleKind::Custom

  static Role of(RoleKind kind) { return Role{kind, {}}; }
  static Role custom(std::string label) { return Role{RoleKind::Custom, std::move(label)}; }

  std::string name() const;
  // Human-readable form used inside prompts ("Incident Commander").
  std::string display_name() const;

  friend bool operator==(const Role&, const Role&) = default;
};

// Accepts canonical names ("IncidentCommander") and spaced or punctuated
// variants ("incident commander", "Marketing/PR"). Anything else becomes a
// custom role carrying the given text.
Role parse_role(std::string_view text);

enum class ScenarioScope : std::uint8_t { Full, Micro };

struct Scenario {
  std::string id;
  std::string title;
  std::string organization;
  std::string attack_type;
  ScenarioScope scope = ScenarioScope::Full;
  std::vector<std::string> domains;
  std::vector<std::string> inject_seeds;
  std::string prior_findings;
  std::string tooling_context;  // micro scope: environment details offered up front

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Participant {
  std::string id;
  std::string display_name;
  std::optional<Role> role;

  friend bool operator==(const Participant&, const Participant&) = default;
};

enum class EventKind : std::uint8_t {
  session_created,
  inject,
  human_response,
  role_assignment,
  phase_transition,
  resolution_declared,
  retrospective,
  action_item,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view name) noexcept;

inline constexpr std::string_view kSystemActor = "system";

struct SessionEvent {
  std::uint64_t sequence_number = 0;
  Timestamp timestamp{};
  Phase phase = Phase::Start;
  std::string actor;
  EventKind kind = EventKind::inject;
  nlohmann::json body;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct SessionOptions {
  std::string session_id;
  Scenario scenario;
  std::vector<Participant> participants;
  Duration time_budget{};
};

class ExerciseSession {
 public:
  // Rejects an empty participant list, duplicate participant ids and a
  // nonpositive time budget. The transcript starts with one creation event.
  static ExerciseSession create(SessionOptions options, Timestamp now);

  // Rebuilds a session by re-applying a stored transcript. Any event that the
  // live operations would have refused raises integrity_error naming its
  // sequence number.
  static ExerciseSession replay(std::span<const SessionEvent> events);

  const std::string& id() const noexcept { return id_; }
  const Scenario& scenario() const noexcept { return scenario_; }
  Phase phase() const noexcept { return phase_; }
  const std::vector<Participant>& participants() const noexcept { return participants_; }
  Timestamp started_at() const noexcept { return started_at_; }
  Duration time_budget() const noexcept { return time_budget_; }
  Timestamp cutoff() const noexcept { return started_at_ + time_budget_; }
  bool resolved() const noexcept { return resolved_; }
  // True while the last facilitator message asked for a human decision that
  // has not been supplied yet.
  bool awaiting_human() const noexcept { return awaiting_human_; }
  const std::vector<SessionEvent>& transcript() const noexcept { return transcript_; }
  const std::string& transcript_ref() const noexcept { return id_; }
  std::uint64_t last_sequence() const noexcept { return transcript_.size(); }

  const Participant* find_participant(std::string_view participant_id) const;
  // Participant holding the Facilitator role, or nullopt when the facilitator
  // backend holds it.
  std::optional<std::string> facilitator_holder() const;
  // Roles held by human participants, in participant order.
  std::vector<Role> human_roles() const;

  void assign_role(std::string_view participant_id, const Role& role, Timestamp now);
  Phase advance(Signal signal, Timestamp now);
  bool time_remaining(Timestamp now) const noexcept { return now < cutoff(); }

  // Facilitator output. `body` must hold at least a non-empty "narrative";
  // "pause_requested" toggles awaiting_human().
  void record_inject(const nlohmann::json& body, Timestamp now);
  void record_human_response(std::string_view participant_id, std::string_view text,
                             Timestamp now);
  void declare_resolution(std::string_view actor, std::string_view note, Timestamp now);
  void record_retrospective(std::string_view text, Timestamp now);
  void record_action_item(const nlohmann::json& item, Timestamp now);

  friend bool operator==(const ExerciseSession&, const ExerciseSession&) = default;

 private:
  ExerciseSession() = default;

  void append(Timestamp now, std::string actor, EventKind kind, nlohmann::json body);
  void apply(const SessionEvent& event);

  std::string id_;
  Scenario scenario_;
  Phase phase_ = Phase::Start;
  std::vector<Participant> participants_;
  Timestamp started_at_{};
  Duration time_budget_{};
  bool resolved_ = false;
  bool awaiting_human_ = false;
  std::vector<SessionEvent> transcript_;
};

inline ExerciseSession create_session(Scenario scenario, std::vector<Participant> participants,
                                      Duration time_budget, std::string session_id,
                                      Timestamp now) {
  return ExerciseSession::create(
      {std::move(session_id), std::move(scenario), std::move(participants), time_budget}, now);
}

inline bool check_time_remaining(const ExerciseSession& session, Timestamp now) noexcept {
  return session.time_remaining(now);
}

// Serializes operations on one session; distinct handles are independent.
class SessionHandle {
 public:
  explicit SessionHandle(ExerciseSession session) : session_(std::move(session)) {}

  template <typename F>
  decltype(auto) with(F&& f) {
    std::lock_guard lock(mu_);
    return std::forward<F>(f)(session_);
  }

  ExerciseSession snapshot() const {
    std::lock_guard lock(mu_);
    return session_;
  }

 private:
  mutable std::mutex mu_;
  ExerciseSession session_;
};

void to_json(nlohmann::json& j, const Role& role);
void from_json(const nlohmann::json& j, Role& role);
void to_json(nlohmann::json& j, const Scenario& scenario);
void from_json(const nlohmann::json& j, Scenario& scenario);
void to_json(nlohmann::json& j, const Participant& participant);
void from_json(const nlohmann::json& j, Participant& participant);
void to_json(nlohmann::json& j, const SessionEvent& event);
void from_json(const nlohmann::json& j, SessionEvent& event);

// Session state as exposed over the API (no transcript).
nlohmann::json session_summary(const ExerciseSession& session, Timestamp now);

}  // namespace ttx
