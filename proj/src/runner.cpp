#include "ttx/runner.hpp"

#include <istream>
#include <ostream>

#include "ttx/domain.hpp"
#include "ttx/error.hpp"
#include "ttx/facilitator.hpp"

namespace ttx {

namespace {

constexpr std::string_view kParticipantId = "p1";

class Driver {
 public:
  Driver(FileStore& store, FacilitatorBackend& backend, const BackendConfig& config,
         const ClockFn& clock, std::istream& responses, std::ostream& out, std::ostream* prompt)
      : store_(store), backend_(backend), config_(config), clock_(clock),
        responses_(responses), out_(out), prompt_(prompt) {}

  RunResult run(const RunOptions& options) {
    const auto domain = ensure_domain(options.domain);

    Scenario scenario;
    scenario.id = "micro-" + domain.domain_id;
    scenario.title = domain.name + " micro-tabletop";
    scenario.scope = ScenarioScope::Micro;
    scenario.domains = {domain.name};
    scenario.tooling_context = options.tooling_context;
    scenario.prior_findings = store_.context_for_future(domain.domain_id);

    SessionOptions so;
    so.session_id = options.session_id.value_or(store_.next_session_id("session"));
    so.scenario = std::move(scenario);
    so.participants = {{std::string(kParticipantId), options.participant_name, std::nullopt}};
    so.time_budget = options.time_budget;
    session_.emplace(ExerciseSession::create(std::move(so), clock_()));
    commit();

    RunResult result;
    result.session_id = session_->id();
    out_ << "session " << result.session_id << "\n";

    advance(Signal::Proceed);
    facilitator_turn(result);
    advance(Signal::Proceed);
    session_->assign_role(kParticipantId, options.role, clock_());
    commit();
    out_ << "-- role: " << options.participant_name << " as " << options.role.display_name() << "\n";
    advance(Signal::Proceed);

    while (session_->phase() != Phase::Debrief) {
      switch (session_->phase()) {
        case Phase::InitialResponse:
        case Phase::IncidentAnalysis:
          facilitator_turn(result);
          advance(Signal::Proceed);
          break;
        case Phase::ResolvedCheck:
          advance(session_->resolved() ? Signal::ResolvedYes : Signal::ResolvedNo);
          break;
        case Phase::TimeCheck:
          advance(Signal::CheckTime);
          break;
        default:
          fail(ErrorCode::phase_error,
               "unexpected phase " + std::string(to_string(session_->phase())));
      }
    }

    auto retro = run_retrospective(*session_, backend_, config_, clock_(), domain.domain_id);
    commit();
    out_ << "-- retrospective\n" << retro.text << "\n";
    const auto ids = store_.store_action_items(retro.parsed.items, session_->id());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      retro.parsed.items[i].item_id = ids[i];
      session_->record_action_item(retro.parsed.items[i], clock_());
      commit();
      out_ << "-- action item " << ids[i] << ": " << retro.parsed.items[i].improvement << "\n";
    }
    for (const auto& w : retro.parsed.warnings) out_ << "-- warning: " << w << "\n";
    result.action_items = std::move(retro.parsed.items);
    result.warnings = std::move(retro.parsed.warnings);

    advance(Signal::Proceed);
    advance(Signal::Proceed);
    return result;
  }

 private:
  ResponsibilityDomain ensure_domain(const std::string& name) {
    if (auto d = store_.find_domain(name)) return *d;
    ResponsibilityDomain d;
    d.name = name;
    d.domain_id = slugify(name);
    store_.save_domain(d);
    return d;
  }

  void commit() { store_.save_session(*session_); }

  void advance(Signal signal) {
    session_->advance(signal, clock_());
    commit();
    out_ << "-- phase: " << to_string(session_->phase()) << "\n";
  }

  std::string read_answer() {
    std::string line;
    while (true) {
      if (prompt_ != nullptr) *prompt_ << "> " << std::flush;
      if (!std::getline(responses_, line)) {
        fail(ErrorCode::validation_error, "the facilitator asked for a response but input ended");
      }
      if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
    }
  }

  void facilitator_turn(RunResult& result) {
    std::optional<HumanInput> input;
    if (session_->awaiting_human()) {
      input = HumanInput{*pending_, std::string(kParticipantId)};
      pending_.reset();
    }
    const auto message = next_turn(*session_, input, backend_, config_, clock_());
    commit();
    ++result.facilitator_messages;
    out_ << "[Facilitator] " << message.narrative << "\n";
    if (message.pause_requested) {
      pending_ = read_answer();
      out_ << "[" << session_->participants().front().display_name << "] " << *pending_ << "\n";
    }
  }

  FileStore& store_;
  FacilitatorBackend& backend_;
  const BackendConfig& config_;
  const ClockFn& clock_;
  std::istream& responses_;
  std::ostream& out_;
  std::ostream* prompt_;
  std::optional<ExerciseSession> session_;
  std::optional<std::string> pending_;
};

}  // namespace

RunResult run_exercise(const RunOptions& options, FileStore& store, FacilitatorBackend& backend,
                       const BackendConfig& config, const ClockFn& clock,
                       std::istream& responses, std::ostream& out, std::ostream* prompt) {
  Driver driver(store, backend, config, clock, responses, out, prompt);
  return driver.run(options);
}

}  // namespace ttx
