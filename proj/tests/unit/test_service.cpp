#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "support.hpp"
#include "ttx/error.hpp"
#include "ttx/facilitator.hpp"
#include "ttx/service.hpp"

using namespace ttx;
using nlohmann::json;

namespace {

std::vector<FacilitatorMessage> script() {
  return {
      {"The SOC sees mass file renames on FS01.", false, false, {}},
      {"Alice, do you pull FS01 off the network?", true, false, {}},
      {"Isolation holds; backups are being checked.", false, false, {}},
      {"Backups are clean and restores begin.", false, false, {}},
      {"Restores complete.\nINCIDENT RESOLVED", false, true, {}},
      {"Quiet night.", false, false, {}},
  };
}

std::string retro_text() {
  return "Critical: Isolation needed a manager call.\nImprovement: Pre-authorise isolation for the on-call lead.\n"
         "Measure: Isolation within 10 minutes in the next exercise.\n\n"
         "Critical: Backup checks were manual.\nImprovement: Automate restore tests weekly.\n";
}

// Settable clock shared by the service and the direct engine run.
struct TestClock {
  std::atomic<long long> ms{testing::t0().time_since_epoch().count()};
  Timestamp now() const { return Timestamp(Duration(ms.load())); }
  void advance(Duration d) { ms += d.count(); }
};

struct Harness {
  testing::TempDir dir;
  TestClock clock;
  std::shared_ptr<MockBackend> backend = std::make_shared<MockBackend>(script(), std::vector<std::string>{retro_text()});
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Server> server;
  std::thread thread;
  int port = 0;

  explicit Harness(std::string token = {}) { start(std::move(token)); }
  ~Harness() { stop(); }

  void start(std::string token = {}) {
    ApiConfig cfg;
    cfg.storage_root = dir.path();
    cfg.cors_origin = "http://localhost:5173";
    service = std::make_unique<Service>(cfg, backend, [this] { return clock.now(); });
    server = std::make_unique<httplib::Server>();
    install_routes(*server, *service, std::move(token));
    port = server->bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server->listen_after_bind(); });
    server->wait_until_ready();
  }
  void stop() {
    if (server) server->stop();
    if (thread.joinable()) thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
};

struct Reply {
  int status = 0;
  json body;
};

Reply call(const httplib::Client& c_in, const std::string& method, const std::string& path,
           const json& body = json::object(), const std::string& token = {}) {
  auto& c = const_cast<httplib::Client&>(c_in);
  httplib::Headers h;
  if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
  httplib::Result r;
  if (method == "GET") r = c.Get(path, h);
  else if (method == "PATCH") r = c.Patch(path, h, body.dump(), "application/json");
  else r = c.Post(path, h, body.dump(), "application/json");
  REQUIRE(r);
  return {r->status, r->body.empty() ? json() : json::parse(r->body)};
}

json new_session_body(const std::string& id = "") {
  json b = {{"scenario",
             {{"id", "ransomware-1"}, {"title", "Ransomware on the file tier"}, {"organization", "Example Corp"},
              {"attack_type", "ransomware"},
              {"domains", {"File Services"}}}},
            {"participants", {{{"id", "alice"}, {"display_name", "Alice"}}, {{"id", "bob"}, {"display_name", "Bob"}}}},
            {"time_budget_minutes", 60}};
  if (!id.empty()) b["session_id"] = id;
  return b;
}

// Walks a session to InitialResponse through the API.
void open_exercise(const httplib::Client& c, const std::string& id) {
  CHECK(call(c, "POST", "/sessions/" + id + "/advance", {{"signal", "proceed"}}).status == 200);
  CHECK(call(c, "POST", "/sessions/" + id + "/turn").status == 200);
  CHECK(call(c, "POST", "/sessions/" + id + "/advance", {{"signal", "proceed"}}).status == 200);
  CHECK(call(c, "POST", "/sessions/" + id + "/roles", {{"participant_id", "alice"}, {"role", "Incident Commander"}})
            .status == 200);
  CHECK(call(c, "POST", "/sessions/" + id + "/advance", {{"signal", "proceed"}}).body["phase"] == "InitialResponse");
}

}  // namespace

TEST_CASE("error codes map onto HTTP statuses") {
  CHECK(http_status(ErrorCode::validation_error) == 400);
  CHECK(http_status(ErrorCode::not_found) == 404);
  CHECK(http_status(ErrorCode::phase_error) == 409);
  CHECK(http_status(ErrorCode::terminal_error) == 409);
  CHECK(http_status(ErrorCode::conflict) == 409);
  CHECK(http_status(ErrorCode::budget_error) == 422);
  CHECK(http_status(ErrorCode::backend_error) == 502);
  CHECK(http_status(ErrorCode::backend_timeout) == 504);
  CHECK(http_status(ErrorCode::integrity_error) == 500);
  CHECK(error_body("conflict", "x") == json{{"error", {{"code", "conflict"}, {"message", "x"}}}});
}

TEST_CASE("full exercise over HTTP") {
  Harness h;
  auto c = h.client();
  CHECK(call(c, "GET", "/healthz").status == 200);

  const auto created = call(c, "POST", "/sessions", new_session_body());
  REQUIRE(created.status == 201);
  const std::string id = created.body["session_id"];
  CHECK(id == "session-0001");
  CHECK(created.body["phase"] == "Start");
  CHECK(created.body["legal_signals"] == json::array({"proceed"}));

  open_exercise(c, id);
  auto paused = call(c, "POST", "/sessions/" + id + "/turn");
  CHECK(paused.body["message"]["pause_requested"] == true);
  CHECK(paused.body["awaiting_human"] == true);
  CHECK(paused.body["latest_message"]["narrative"] == "Alice, do you pull FS01 off the network?");

  // Turning without an answer while one is pending is refused.
  CHECK(call(c, "POST", "/sessions/" + id + "/turn").status == 400);
  auto answered = call(c, "POST", "/sessions/" + id + "/turn",
                       {{"human_input", "Yes, isolate it now."}, {"participant_id", "alice"}});
  CHECK(answered.status == 200);
  CHECK(answered.body["awaiting_human"] == false);
  const auto unsolicited = call(c, "POST", "/sessions/" + id + "/turn", {{"human_input", "One more thing."}});
  CHECK(unsolicited.status == 400);
  CHECK(unsolicited.body["error"]["code"] == "validation_error");

  CHECK(call(c, "POST", "/sessions/" + id + "/advance", {{"signal", "proceed"}}).body["phase"] == "IncidentAnalysis");
  call(c, "POST", "/sessions/" + id + "/turn");
  CHECK(call(c, "POST", "/sessions/" + id + "/resolution", {{"note", "restores verified"}}).body["resolved"] == true);
  CHECK(call(c, "POST", "/sessions/" + id + "/advance", {{"signal", "proceed"}}).body["phase"] == "ResolvedCheck");
  const auto debrief = call(c, "POST", "/sessions/" + id + "/advance", {{"verdict", "yes"}});
  CHECK(debrief.body["phase"] == "Debrief");

  CHECK(call(c, "POST", "/domains", {{"name", "File Services"}, {"owning_team", "Infra"}}).status == 201);
  CHECK(call(c, "GET", "/domains").body["domains"].size() == 1);

  const auto retro = call(c, "POST", "/sessions/" + id + "/retrospective", {{"domain", "File Services"}});
  REQUIRE(retro.status == 200);
  REQUIRE(retro.body["items"].size() == 2);
  CHECK(retro.body["items"][0]["item_id"] == "AI-000001");
  CHECK(retro.body["items"][0]["responsibility_domain"] == "file-services");
  CHECK(retro.body["items"][1]["measurable_criterion"] == "");

  CHECK(call(c, "GET", "/action-items?domain=File%20Services").body["items"].size() == 2);
  const auto patched = call(c, "PATCH", "/action-items/AI-000001", {{"status", "done"}});
  CHECK(patched.status == 200);
  CHECK(patched.body["status"] == "done");
  CHECK(call(c, "GET", "/action-items").body["items"].size() == 1);
  CHECK(call(c, "PATCH", "/action-items/AI-000001", {{"status", "open"}}).status == 400);
  CHECK(call(c, "PATCH", "/action-items/AI-000404", {{"status", "done"}}).status == 404);

  call(c, "POST", "/sessions/" + id + "/advance", {{"signal", "proceed"}});
  const auto end = call(c, "POST", "/sessions/" + id + "/advance", {{"signal", "proceed"}});
  CHECK(end.body["phase"] == "End");
  const auto after_end = call(c, "POST", "/sessions/" + id + "/turn");
  CHECK(after_end.status == 409);
  CHECK(after_end.body["error"]["code"] == "terminal_error");

  const auto tr = call(c, "GET", "/sessions/" + id + "/transcript");
  CHECK(tr.body["events"].size() == call(c, "GET", "/sessions/" + id).body["last_sequence"]);
}

TEST_CASE("resolved check routes on the verdict and time check on the clock") {
  Harness h;
  auto c = h.client();
  auto body = new_session_body("short");
  body.erase("time_budget_minutes");
  body["time_budget_ms"] = 60000;
  call(c, "POST", "/sessions", body);
  open_exercise(c, "short");
  call(c, "POST", "/sessions/short/advance", {{"signal", "proceed"}});
  call(c, "POST", "/sessions/short/advance", {{"signal", "proceed"}});
  CHECK(call(c, "POST", "/sessions/short/advance", {{"verdict", "no"}}).body["phase"] == "TimeCheck");
  CHECK(call(c, "POST", "/sessions/short/advance", {{"signal", "check_time"}}).body["phase"] == "InitialResponse");
  call(c, "POST", "/sessions/short/advance", {{"signal", "proceed"}});
  call(c, "POST", "/sessions/short/advance", {{"signal", "proceed"}});
  call(c, "POST", "/sessions/short/advance", {{"verdict", "no"}});
  h.clock.advance(std::chrono::minutes(1));
  CHECK(call(c, "POST", "/sessions/short/advance", {{"signal", "check_time"}}).body["phase"] == "Debrief");

  const auto wrong = call(c, "POST", "/sessions/short/advance", {{"verdict", "yes"}});
  CHECK(wrong.status == 409);
  CHECK(wrong.body["error"]["code"] == "phase_error");
  CHECK(call(c, "POST", "/sessions/short/advance", {{"signal", "sideways"}}).status == 400);
  CHECK(call(c, "POST", "/sessions/short/advance", json::object()).status == 400);
}

TEST_CASE("request validation and unknown resources") {
  Harness h;
  auto c = h.client();
  const auto missing = call(c, "GET", "/sessions/ghost");
  CHECK(missing.status == 404);
  CHECK(missing.body["error"]["code"] == "not_found");
  CHECK(call(c, "POST", "/sessions/ghost/turn").status == 404);
  CHECK(call(c, "POST", "/sessions", {{"scenario", {{"id", "x"}}}, {"participants", json::array()}}).status == 400);
  auto dup = new_session_body("dup");
  CHECK(call(c, "POST", "/sessions", dup).status == 201);
  CHECK(call(c, "POST", "/sessions", dup).status == 409);
  // Roles belong to RoleAssignment; elsewhere the phase check answers first.
  CHECK(call(c, "POST", "/sessions/dup/roles", {{"participant_id", "alice"}, {"role", "Legal Advisor"}}).status == 409);
  call(c, "POST", "/sessions/dup/advance", {{"signal", "proceed"}});
  call(c, "POST", "/sessions/dup/advance", {{"signal", "proceed"}});
  CHECK(call(c, "POST", "/sessions/dup/roles", {{"participant_id", "zoe"}, {"role", "Legal Advisor"}}).status == 404);
  CHECK(call(c, "POST", "/sessions/dup/roles", {{"role", "Legal Advisor"}}).status == 400);
  auto r = c.Post("/sessions", "{not json", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  CHECK(json::parse(r->body)["error"]["code"] == "validation_error");
  CHECK(call(c, "POST", "/sessions/dup/retrospective").status == 409);
}

TEST_CASE("scores endpoint") {
  Harness h;
  auto c = h.client();
  const json profiles = json::array({
      {{"team_id", "blue"}, {"S", 9}, {"K", 9}, {"R", 7}, {"C", 8}, {"A", 8}, {"E", 9}},
      {{"team_id", "red"}, {"S", 5}, {"K", 3}, {"R", 7}, {"C", 6}, {"A", 5}, {"E", 2}},
  });
  const auto r = call(c, "POST", "/scores/upbs", {{"profiles", profiles}, {"alphas", {0.0, 0.5, 1.0}}});
  REQUIRE(r.status == 200);
  CHECK(r.body["teams"][0]["preparedness"].get<double>() == doctest::Approx(50.0 / 60));
  CHECK(r.body["teams"][1]["preparedness"].get<double>() == doctest::Approx(28.0 / 60));
  CHECK(r.body["deltas"][0]["delta"].get<double>() == doctest::Approx(22.0 / 60));
  const auto& at_one = r.body["results"][2];
  CHECK(at_one["p_avg"].get<double>() == doctest::Approx(0.65));
  CHECK(at_one["upbs"].get<double>() == doctest::Approx(0.65));
  CHECK(r.body["results"][0]["upbs"].get<double>() == doctest::Approx(1 - 22.0 / 60));
  const auto fallback = call(c, "POST", "/scores/upbs", {{"profiles", profiles}});
  CHECK(fallback.body["results"][0]["alpha"] == 0.5);
  CHECK(call(c, "POST", "/scores/upbs", {{"profiles", json::array()}}).status == 400);
  CHECK(call(c, "POST", "/scores/upbs", {{"profiles", {{{"team_id", "x"}, {"S", 11}, {"K", 1}, {"R", 1}, {"C", 1}, {"A", 1}, {"E", 1}}}}})
            .status == 400);
  CHECK(call(c, "POST", "/scores/upbs", {{"profiles", profiles}, {"alpha", 2}}).status == 400);
}

TEST_CASE("bearer token guards everything except health") {
  Harness h("s3cret");
  auto c = h.client();
  CHECK(call(c, "GET", "/healthz").status == 200);
  const auto denied = call(c, "GET", "/domains");
  CHECK(denied.status == 401);
  CHECK(denied.body["error"]["code"] == "unauthorized");
  CHECK(call(c, "GET", "/domains", {}, "wrong").status == 401);
  CHECK(call(c, "GET", "/domains", {}, "s3cret").status == 200);
  auto pre = c.Options("/sessions");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
}

TEST_CASE("two answers to one question: exactly one wins") {
  Harness h;
  auto c = h.client();
  call(c, "POST", "/sessions", new_session_body("race"));
  open_exercise(c, "race");
  REQUIRE(call(c, "POST", "/sessions/race/turn").body["awaiting_human"] == true);
  std::atomic<int> ok{0}, refused{0};
  std::vector<std::thread> ts;
  for (const char* who : {"alice", "bob"}) {
    ts.emplace_back([&, who] {
      auto mine = h.client();
      const auto r = call(mine, "POST", "/sessions/race/turn",
                          {{"human_input", std::string("answer from ") + who}, {"participant_id", who}});
      if (r.status == 200) ++ok;
      if (r.status == 400 && r.body["error"]["code"] == "validation_error") ++refused;
    });
  }
  for (auto& t : ts) t.join();
  CHECK(ok.load() == 1);
  CHECK(refused.load() == 1);
  const auto events = call(c, "GET", "/sessions/race/transcript").body["events"];
  int responses = 0;
  for (const auto& e : events) responses += e["kind"] == "human_response";
  CHECK(responses == 1);
}

TEST_CASE("optimistic concurrency with expected_sequence") {
  Harness h;
  auto c = h.client();
  const auto s = call(c, "POST", "/sessions", new_session_body("occ")).body;
  const auto seq = s["last_sequence"].get<int>();
  CHECK(call(c, "POST", "/sessions/occ/advance", {{"signal", "proceed"}, {"expected_sequence", seq}}).status == 200);
  const auto stale = call(c, "POST", "/sessions/occ/advance", {{"signal", "proceed"}, {"expected_sequence", seq}});
  CHECK(stale.status == 409);
  CHECK(stale.body["error"]["code"] == "conflict");
}

TEST_CASE("a restarted service keeps every acknowledged event") {
  Harness h;
  {
    auto c = h.client();
    call(c, "POST", "/sessions", new_session_body("durable"));
    open_exercise(c, "durable");
  }
  const auto before = h.service->transcript("durable");
  h.stop();
  h.service.reset();
  h.start();
  auto c = h.client();
  CHECK(call(c, "GET", "/sessions/durable/transcript").body == before);
  CHECK(call(c, "GET", "/sessions/durable").body["phase"] == "InitialResponse");
  CHECK(call(c, "POST", "/sessions/durable/turn").status == 200);
}

TEST_CASE("the API produces the same transcript as driving the engine directly") {
  Harness h;
  auto c = h.client();
  call(c, "POST", "/sessions", new_session_body("same"));
  open_exercise(c, "same");
  call(c, "POST", "/sessions/same/turn");
  call(c, "POST", "/sessions/same/turn", {{"human_input", "Isolate."}, {"participant_id", "alice"}});
  call(c, "POST", "/sessions/same/advance", {{"signal", "proceed"}});
  const auto api_events = call(c, "GET", "/sessions/same/transcript").body["events"];

  MockBackend backend(script(), {retro_text()});
  const auto t = testing::t0();
  Scenario sc = new_session_body()["scenario"].get<Scenario>();
  auto s = create_session(sc, {{"alice", "Alice", std::nullopt}, {"bob", "Bob", std::nullopt}},
                          std::chrono::minutes(60), "same", t);
  s.advance(Signal::Proceed, t);
  next_turn(s, std::nullopt, backend, BackendConfig{}, t);
  s.advance(Signal::Proceed, t);
  s.assign_role("alice", parse_role("Incident Commander"), t);
  s.advance(Signal::Proceed, t);
  next_turn(s, std::nullopt, backend, BackendConfig{}, t);
  next_turn(s, HumanInput{"Isolate.", "alice"}, backend, BackendConfig{}, t);
  s.advance(Signal::Proceed, t);
  CHECK(api_events == json(s.transcript()));
}
