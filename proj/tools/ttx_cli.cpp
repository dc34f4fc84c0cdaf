// Command-line front end: serve, run, score, sweep, retro.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "ttx/config.hpp"
#include "ttx/error.hpp"
#include "ttx/facilitator.hpp"
#include "ttx/persistence.hpp"
#include "ttx/runner.hpp"
#include "ttx/scoring.hpp"
#include "ttx/service.hpp"

namespace {

using namespace ttx;
namespace sc = ttx::scoring;

constexpr std::string_view kScriptEpoch = "2024-01-01T10:00:00.000Z";

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::backend_timeout:
    case ErrorCode::backend_error:
    case ErrorCode::auth_error:
    case ErrorCode::script_exhausted:
      return 2;
    default:
      return 1;
  }
}

struct BackendFlags {
  std::string config_file;
  std::string script;
  std::string storage;
};

ApiConfig resolve_config(const BackendFlags& flags) {
  std::optional<std::filesystem::path> file;
  if (!flags.config_file.empty()) file = flags.config_file;
  ApiConfig cfg;
  if (file) {
    cfg = load_api_config(file);
  } else if (!flags.script.empty()) {
    cfg.backend.script_path = flags.script;
  }
  if (!flags.script.empty()) {
    cfg.backend.mode = BackendMode::mock;
    cfg.backend.script_path = flags.script;
  }
  if (!flags.storage.empty()) cfg.storage_root = flags.storage;
  cfg.validate();
  return cfg;
}

// Scripted runs use a fixed clock so repeated runs write identical logs.
ClockFn clock_for(const BackendConfig& backend, std::shared_ptr<ManualClock>& holder) {
  if (backend.mode == BackendMode::live) return system_now;
  holder = std::make_shared<ManualClock>(parse_timestamp(kScriptEpoch));
  return [holder] { return holder->tick(); };
}

std::vector<sc::Configuration> builtin_configurations() {
  auto team = [](std::string id, double v) { return sc::TeamProfile{std::move(id), v, v, v, v, v, v, 10}; };
  return {
      {"Perfect prep", {team("red", 10), team("blue", 10), team("green", 10)}},
      {"Uniform Low", {team("red", 3), team("blue", 3), team("green", 3)}},
      {"Mixed", {team("red", 9), team("blue", 6), team("green", 3)}},
      {"One laggard", {team("red", 9), team("blue", 9), team("green", 2)}},
  };
}

int cmd_score(const std::string& path, double alpha) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::validation_error, "cannot open " + path);
  const auto profiles = sc::parse_profiles_csv(in);
  std::vector<sc::PreparednessScore> scores;
  for (const auto& p : profiles) {
    scores.push_back(sc::preparedness(p));
    std::cout << "P(" << p.team_id << ") = " << sc::format_score(scores.back().value) << "\n";
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      const auto d = sc::preparedness_delta(scores[i], scores[j]);
      std::cout << "dP(" << d.team_a << ", " << d.team_b << ") = " << sc::format_score(d.delta)
                << "\n";
    }
  }
  const auto r = sc::upbs(profiles, alpha);
  std::cout << "UPBS(alpha=" << sc::format_score(alpha, 2) << ") = " << sc::format_score(r.score)
            << "  [p_avg " << sc::format_score(r.p_avg) << ", mean |dP| "
            << sc::format_score(r.mean_abs_delta) << "]\n";
  return 0;
}

int cmd_sweep(const std::string& path, int steps, const std::vector<double>& alphas_in,
              const std::string& out_path, int precision) {
  std::vector<sc::Configuration> configs;
  if (path.empty()) {
    configs = builtin_configurations();
  } else {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::validation_error, "cannot open " + path);
    configs = sc::read_configurations_csv(in);
  }
  const auto alphas = alphas_in.empty() ? sc::alpha_grid(steps) : alphas_in;
  const auto table = sc::emit_score_table(configs, alphas);
  if (out_path.empty()) {
    sc::write_score_csv(std::cout, table, precision);
  } else {
    std::ofstream out(out_path);
    if (!out) fail(ErrorCode::validation_error, "cannot write " + out_path);
    sc::write_score_csv(out, table, precision);
  }
  return 0;
}

int cmd_run(const BackendFlags& flags, const RunOptions& options, const std::string& responses,
            const std::string& transcript_out) {
  const auto cfg = resolve_config(flags);
  FileStore store(cfg.storage_root);
  auto backend = make_backend(cfg.backend);
  std::shared_ptr<ManualClock> manual;
  const ClockFn clock = clock_for(cfg.backend, manual);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (!responses.empty()) {
    file.open(responses);
    if (!file) fail(ErrorCode::validation_error, "cannot open " + responses);
    in = &file;
  }
  const auto result = run_exercise(options, store, *backend, cfg.backend, clock, *in, std::cout,
                                   responses.empty() ? &std::cerr : nullptr);
  if (!transcript_out.empty()) {
    std::ofstream out(transcript_out, std::ios::binary);
    if (!out) fail(ErrorCode::validation_error, "cannot write " + transcript_out);
    for (const auto& e : store.read_events(result.session_id)) out << nlohmann::json(e).dump() << "\n";
  }
  std::cout << "-- finished " << result.session_id << " with " << result.action_items.size()
            << " action item(s)\n";
  return 0;
}

int cmd_retro(const BackendFlags& flags, const std::string& session_id,
              const std::string& domain, bool store_items) {
  const auto cfg = resolve_config(flags);
  FileStore store(cfg.storage_root);
  auto session = store.load_session(session_id);
  auto backend = make_backend(cfg.backend);
  std::optional<std::string> domain_id;
  if (!domain.empty()) {
    const auto d = store.find_domain(domain);
    if (!d) fail(ErrorCode::validation_error, "unknown responsibility domain '" + domain + "'");
    domain_id = d->domain_id;
  }
  const auto now = cfg.backend.mode == BackendMode::live
                       ? system_now()
                       : std::max(session.transcript().back().timestamp, session.started_at()) +
                             std::chrono::seconds(1);
  auto outcome = run_retrospective(session, *backend, cfg.backend, now, domain_id);
  if (store_items) {
    const auto ids = store.store_action_items(outcome.parsed.items, session.id());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      outcome.parsed.items[i].item_id = ids[i];
      session.record_action_item(outcome.parsed.items[i], now);
    }
    store.save_session(session);
  }
  for (const auto& item : outcome.parsed.items) {
    std::cout << (item.item_id.empty() ? "-" : item.item_id) << "\n"
              << "  Critical: " << item.finding << "\n"
              << "  Improvement: " << item.improvement << "\n";
    if (!item.measurable_criterion.empty()) {
      std::cout << "  Measure: " << item.measurable_criterion << "\n";
    }
  }
  for (const auto& w : outcome.parsed.warnings) std::cerr << "warning: " << w << "\n";
  return outcome.parsed.items.empty() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabletop exercise orchestrator"};
  app.require_subcommand(1);

  std::string config_file;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("-c,--config", config_file, "INI configuration file");

  BackendFlags flags;
  RunOptions run_opts;
  std::string responses;
  std::string transcript_out;
  long long budget_minutes = 60;
  std::string role_name = "SecurityTeamMember";
  auto* run = app.add_subcommand("run", "Play a micro-tabletop in the terminal");
  run->add_option("-c,--config", flags.config_file, "INI configuration file");
  run->add_option("--script", flags.script, "Mock facilitator script (JSON Lines)");
  run->add_option("--storage", flags.storage, "Storage root");
  run->add_option("--domain", run_opts.domain, "Responsibility domain under test");
  run->add_option("--tooling", run_opts.tooling_context, "Tooling context offered to the facilitator");
  run->add_option("--name", run_opts.participant_name, "Participant display name");
  run->add_option("--role", role_name, "Participant role");
  run->add_option("--time-budget", budget_minutes, "Time budget in minutes")->check(CLI::PositiveNumber);
  run->add_option("--responses", responses, "File with one answer per line (default: stdin)");
  run->add_option("--transcript-out", transcript_out, "Write the event log here as JSON Lines");

  std::string profiles;
  double alpha = 0.5;
  auto* score = app.add_subcommand("score", "Preparedness, pairwise delta and UPBS for a team table");
  score->add_option("profiles", profiles, "CSV: team_id,S,K,R,C,A,E,scale_max")->required();
  score->add_option("-a,--alpha", alpha, "Preparedness weight")->check(CLI::Range(0.0, 1.0));

  std::string sweep_file;
  std::string sweep_out;
  int steps = 10;
  int precision = 6;
  std::vector<double> alphas;
  auto* sweep = app.add_subcommand("sweep", "Configuration x alpha UPBS table as CSV");
  sweep->add_option("configurations", sweep_file,
                    "CSV: configuration,team_id,S,K,R,C,A,E,scale_max (default: built-in set)");
  sweep->add_option("--steps", steps, "Alpha grid resolution")->check(CLI::PositiveNumber);
  sweep->add_option("--alphas", alphas, "Explicit alpha values")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--precision", precision, "Decimal places")->check(CLI::Range(0, 17));
  sweep->add_option("-o,--out", sweep_out, "Output file (default: stdout)");

  BackendFlags retro_flags;
  std::string session_id;
  std::string retro_domain;
  bool retro_store = false;
  auto* retro = app.add_subcommand("retro", "Retrospective over a stored session");
  retro->add_option("session", session_id, "Session id")->required();
  retro->add_option("-c,--config", retro_flags.config_file, "INI configuration file");
  retro->add_option("--script", retro_flags.script, "Mock facilitator script (JSON Lines)");
  retro->add_option("--storage", retro_flags.storage, "Storage root");
  retro->add_option("--domain", retro_domain, "Responsibility domain for the items");
  retro->add_flag("--store", retro_store, "Record the retrospective and store the items");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*serve) {
      std::optional<std::filesystem::path> file;
      if (!config_file.empty()) file = config_file;
      ttx::serve(load_api_config(file));
      return 0;
    }
    if (*run) {
      run_opts.time_budget = std::chrono::minutes(budget_minutes);
      run_opts.role = parse_role(role_name);
      return cmd_run(flags, run_opts, responses, transcript_out);
    }
    if (*score) return cmd_score(profiles, alpha);
    if (*sweep) return cmd_sweep(sweep_file, steps, alphas, sweep_out, precision);
    if (*retro) return cmd_retro(retro_flags, session_id, retro_domain, retro_store);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
