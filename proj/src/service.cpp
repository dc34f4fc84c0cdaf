#include "ttx/service.hpp"

#include <httplib.h>

#include <iostream>

#include "ttx/domain.hpp"
#include "ttx/exercise.hpp"
#include "ttx/facilitator.hpp"
#include "ttx/scoring.hpp"

namespace ttx {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation_error: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::phase_error:
    case ErrorCode::terminal_error:
    case ErrorCode::conflict:
    case ErrorCode::script_exhausted: return 409;
    case ErrorCode::budget_error:
    case ErrorCode::render_error: return 422;
    case ErrorCode::backend_error:
    case ErrorCode::auth_error: return 502;
    case ErrorCode::backend_timeout: return 504;
    case ErrorCode::integrity_error: return 500;
  }
  return 500;
}

json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

namespace {

void check_expected_sequence(const ExerciseSession& s, const json& body) {
  if (!body.contains("expected_sequence") || body["expected_sequence"].is_null()) return;
  const auto expected = body["expected_sequence"].get<std::uint64_t>();
  if (expected != s.last_sequence()) {
    fail(ErrorCode::conflict, "session " + s.id() + " is at sequence " +
                                  std::to_string(s.last_sequence()) + ", request expected " +
                                  std::to_string(expected));
  }
}

std::string required_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string() || body[key].get<std::string>().empty()) {
    fail(ErrorCode::validation_error, std::string("'") + key + "' is required");
  }
  return body[key].get<std::string>();
}

double factor(const json& j, const char* short_key, const char* long_key) {
  if (j.contains(short_key)) return j.at(short_key).get<double>();
  if (j.contains(long_key)) return j.at(long_key).get<double>();
  fail(ErrorCode::validation_error, std::string("team profile is missing ") + short_key);
}

scoring::TeamProfile profile_from_json(const json& j) {
  scoring::TeamProfile p;
  p.team_id = j.value("team_id", std::string{});
  p.skills = factor(j, "S", "skills");
  p.knowledge = factor(j, "K", "knowledge");
  p.resources = factor(j, "R", "resources");
  p.cohesion = factor(j, "C", "cohesion");
  p.adaptability = factor(j, "A", "adaptability");
  p.experience = factor(j, "E", "experience");
  p.scale_max = j.value("scale_max", 10.0);
  p.validate();
  return p;
}

json upbs_json(const scoring::UpbsResult& r) {
  return {{"alpha", r.alpha},
          {"beta", r.beta},
          {"p_avg", r.p_avg},
          {"mean_abs_delta", r.mean_abs_delta},
          {"upbs", r.score}};
}

json session_view(const ExerciseSession& s, Timestamp now) {
  json j = session_summary(s, now);
  json roles = json::object();
  for (const auto& p : s.participants()) {
    if (p.role) roles[p.id] = *p.role;
  }
  j["roles"] = roles;
  j["latest_message"] = nullptr;
  const auto& t = s.transcript();
  for (auto it = t.rbegin(); it != t.rend(); ++it) {
    if (it->kind == EventKind::inject) {
      j["latest_message"] = it->body;
      break;
    }
  }
  return j;
}

}  // namespace

Service::Service(ApiConfig config, std::shared_ptr<FacilitatorBackend> backend, ClockFn clock)
    : config_(std::move(config)),
      store_(config_.storage_root),
      backend_(std::move(backend)),
      clock_(std::move(clock)) {
  config_.validate();
  if (!backend_) backend_ = make_backend(config_.backend);
  if (!clock_) clock_ = system_now;
}

std::shared_ptr<std::mutex> Service::session_mutex(const std::string& id) {
  std::lock_guard lock(registry_mu_);
  auto& slot = session_mu_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

template <typename F>
json Service::mutate(const std::string& id, const json& body, F&& op) {
  const auto mu = session_mutex(id);
  std::lock_guard lock(*mu);
  const ExerciseSession current = store_.load_session(id);
  check_expected_sequence(current, body);
  ExerciseSession next = current;
  json extra = op(next);
  store_.save_session(next);
  json out = session_view(next, clock_());
  if (!extra.is_null()) out.update(extra);
  return out;
}

json Service::create_session(const json& body) {
  SessionOptions opts;
  opts.scenario = body.value("scenario", json::object()).get<Scenario>();
  for (const auto& p : body.value("participants", json::array())) {
    opts.participants.push_back(p.get<Participant>());
  }
  if (body.contains("time_budget_ms")) {
    opts.time_budget = Duration(body["time_budget_ms"].get<long long>());
  } else if (body.contains("time_budget_minutes")) {
    opts.time_budget = std::chrono::minutes(body["time_budget_minutes"].get<long long>());
  } else {
    opts.time_budget = config_.default_time_budget;
  }
  std::lock_guard lock(create_mu_);
  if (body.contains("session_id")) {
    opts.session_id = body["session_id"].get<std::string>();
    if (store_.has_session(opts.session_id)) {
      fail(ErrorCode::conflict, "session " + opts.session_id + " already exists");
    }
  } else {
    opts.session_id = store_.next_session_id("session");
  }
  const auto now = clock_();
  const auto session = ExerciseSession::create(std::move(opts), now);
  store_.save_session(session);
  return session_view(session, now);
}

json Service::assign_role(const std::string& id, const json& body) {
  const auto pid = required_string(body, "participant_id");
  const Role role = parse_role(required_string(body, "role"));
  return mutate(id, body, [&](ExerciseSession& s) {
    s.assign_role(pid, role, clock_());
    return json();
  });
}

json Service::advance(const std::string& id, const json& body) {
  std::string name;
  if (body.contains("signal")) {
    name = required_string(body, "signal");
  } else if (body.contains("verdict")) {
    name = "verdict=" + required_string(body, "verdict");
  } else {
    fail(ErrorCode::validation_error, "'signal' is required");
  }
  const auto signal = parse_signal(name);
  if (!signal) fail(ErrorCode::validation_error, "unknown signal '" + name + "'");
  return mutate(id, body, [&](ExerciseSession& s) {
    s.advance(*signal, clock_());
    return json();
  });
}

json Service::turn(const std::string& id, const json& body) {
  std::optional<HumanInput> input;
  if (body.contains("human_input") && !body["human_input"].is_null()) {
    input = HumanInput{body["human_input"].get<std::string>(),
                       body.value("participant_id", std::string{})};
  }
  return mutate(id, body, [&](ExerciseSession& s) {
    if (input && !s.awaiting_human()) {
      fail(ErrorCode::validation_error, "the facilitator is not waiting for a response");
    }
    const auto message = next_turn(s, input, *backend_, config_.backend, clock_());
    return json{{"message", message}};
  });
}

json Service::declare_resolution(const std::string& id, const json& body) {
  const auto actor = body.value("actor", std::string("Facilitator"));
  const auto note = body.value("note", std::string{});
  return mutate(id, body, [&](ExerciseSession& s) {
    s.declare_resolution(actor, note, clock_());
    return json();
  });
}

json Service::get_session(const std::string& id) {
  return session_view(store_.load_session(id), clock_());
}

json Service::transcript(const std::string& id) {
  const auto s = store_.load_session(id);
  return {{"session_id", s.id()}, {"events", s.transcript()}};
}

json Service::retrospective(const std::string& id, const json& body) {
  std::optional<std::string> domain;
  if (body.contains("domain") && !body["domain"].is_null()) {
    const auto d = store_.find_domain(body["domain"].get<std::string>());
    if (!d) fail(ErrorCode::validation_error, "unknown responsibility domain");
    domain = d->domain_id;
  }
  return mutate(id, body, [&](ExerciseSession& s) {
    auto outcome = run_retrospective(s, *backend_, config_.backend, clock_(), domain);
    const auto ids = store_.store_action_items(outcome.parsed.items, s.id());
    json items = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      outcome.parsed.items[i].item_id = ids[i];
      json item = outcome.parsed.items[i];
      s.record_action_item(item, clock_());
      items.push_back(std::move(item));
    }
    return json{{"items", items},
                {"warnings", outcome.parsed.warnings},
                {"retrospective", outcome.text}};
  });
}

json Service::score_upbs(const json& body) const {
  std::vector<scoring::TeamProfile> profiles;
  for (const auto& p : body.value("profiles", json::array())) profiles.push_back(profile_from_json(p));
  if (profiles.empty()) fail(ErrorCode::validation_error, "at least one team profile is required");
  std::vector<double> alphas;
  if (body.contains("alphas")) {
    alphas = body["alphas"].get<std::vector<double>>();
  } else if (body.contains("alpha")) {
    alphas.push_back(body["alpha"].get<double>());
  } else {
    alphas.push_back(config_.default_alpha);
  }
  json teams = json::array();
  std::vector<scoring::PreparednessScore> scores;
  for (const auto& p : profiles) {
    scores.push_back(scoring::preparedness(p));
    teams.push_back({{"team_id", p.team_id}, {"preparedness", scores.back().value}});
  }
  json deltas = json::array();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      const auto d = scoring::preparedness_delta(scores[i], scores[j]);
      deltas.push_back({{"team_a", d.team_a}, {"team_b", d.team_b}, {"delta", d.delta}});
    }
  }
  json results = json::array();
  for (const auto& r : scoring::upbs_sweep(profiles, alphas)) results.push_back(upbs_json(r));
  return {{"teams", teams}, {"deltas", deltas}, {"results", results}};
}

json Service::action_items(const std::optional<std::string>& domain) const {
  std::optional<std::string_view> d;
  if (domain) d = *domain;
  return {{"items", store_.open_items(d)}};
}

json Service::update_action_item(const std::string& id, const json& body) {
  const auto status = parse_action_status(required_string(body, "status"));
  if (!status) fail(ErrorCode::validation_error, "unknown status");
  std::optional<ActionStatus> expected;
  if (body.contains("expected_status")) {
    expected = parse_action_status(required_string(body, "expected_status"));
    if (!expected) fail(ErrorCode::validation_error, "unknown expected_status");
  }
  const auto stored = store_.update_status(id, *status, expected, body.value("reopen", false));
  json out = stored.item;
  out["revision"] = stored.revision;
  out["audit"] = stored.audit;
  return out;
}

json Service::create_domain(const json& body) {
  const auto domain = body.get<ResponsibilityDomain>();
  store_.save_domain(domain);
  return domain;
}

json Service::list_domains() const { return {{"domains", store_.list_domains()}}; }

// ---------------------------------------------------------------------------
// HTTP binding

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) fail(ErrorCode::validation_error, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(ErrorCode::validation_error, std::string("malformed JSON body: ") + e.what());
  }
}

template <typename F>
httplib::Server::Handler wrap(F handler, int success = 200) {
  return [handler, success](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, success, handler(req));
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), error_body(to_string(e.code()), e.what()));
    } catch (const json::exception& e) {
      send_json(res, 400, error_body("validation_error", e.what()));
    } catch (const std::exception& e) {
      send_json(res, 500, error_body("internal_error", e.what()));
    }
  };
}

}  // namespace

void install_routes(httplib::Server& server, Service& service, std::string bearer_token) {
  const std::string cors = service.config().cors_origin;
  server.set_pre_routing_handler([bearer_token, cors](const httplib::Request& req,
                                                      httplib::Response& res) {
    if (!cors.empty()) {
      res.set_header("Access-Control-Allow-Origin", cors);
      res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
      if (req.method == "OPTIONS") {
        res.status = 204;
        return httplib::Server::HandlerResponse::Handled;
      }
    }
    if (bearer_token.empty() || req.path == "/healthz") {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    if (req.get_header_value("Authorization") != "Bearer " + bearer_token) {
      send_json(res, 401, error_body("unauthorized", "missing or invalid bearer token"));
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  auto* s = &service;
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });
  server.Post("/sessions", wrap([s](const auto& req) { return s->create_session(parse_body(req)); }, 201));
  server.Get(R"(/sessions/([^/]+))",
             wrap([s](const auto& req) { return s->get_session(req.matches[1]); }));
  server.Get(R"(/sessions/([^/]+)/transcript)",
             wrap([s](const auto& req) { return s->transcript(req.matches[1]); }));
  server.Post(R"(/sessions/([^/]+)/roles)", wrap([s](const auto& req) {
                return s->assign_role(req.matches[1], parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/advance)", wrap([s](const auto& req) {
                return s->advance(req.matches[1], parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/turn)", wrap([s](const auto& req) {
                return s->turn(req.matches[1], parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/resolution)", wrap([s](const auto& req) {
                return s->declare_resolution(req.matches[1], parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/retrospective)", wrap([s](const auto& req) {
                return s->retrospective(req.matches[1], parse_body(req));
              }));
  server.Post("/scores/upbs", wrap([s](const auto& req) { return s->score_upbs(parse_body(req)); }));
  server.Get("/action-items", wrap([s](const auto& req) {
               std::optional<std::string> domain;
               if (req.has_param("domain")) domain = req.get_param_value("domain");
               return s->action_items(domain);
             }));
  server.Patch(R"(/action-items/([^/]+))", wrap([s](const auto& req) {
                 return s->update_action_item(req.matches[1], parse_body(req));
               }));
  server.Post("/domains", wrap([s](const auto& req) { return s->create_domain(parse_body(req)); }, 201));
  server.Get("/domains", wrap([s](const auto&) { return s->list_domains(); }));

  if (!service.config().static_dir.empty()) {
    server.set_mount_point("/", service.config().static_dir.string());
  }
}

void serve(const ApiConfig& config) {
  Service service(config);
  std::string token;
  if (auto t = process_env(config.token_env)) token = *t;
  httplib::Server server;
  install_routes(server, service, token);
  std::cerr << "listening on " << config.host << ":" << config.port
            << (token.empty() ? " (no authentication)" : "") << "\n";
  if (!server.listen(config.host, config.port)) {
    fail(ErrorCode::validation_error,
         "cannot listen on " + config.host + ":" + std::to_string(config.port));
  }
}

}  // namespace ttx
