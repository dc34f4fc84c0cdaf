#include "ttx/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "ttx/error.hpp"
#include "ttx/prompts.hpp"

namespace ttx {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool has_sentinel_line(std::string_view text, std::string_view sentinel) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = trim_view(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
    while (!line.empty() && (line.front() == '*' || line.front() == '_')) line.remove_prefix(1);
    while (!line.empty() && (line.back() == '*' || line.back() == '_' || line.back() == '.' ||
                             line.back() == '!')) {
      line.remove_suffix(1);
    }
    if (lower(line) == lower(sentinel)) return true;
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return false;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

// Split "http://host:port/path" into origin and path for httplib.
struct UrlParts {
  std::string origin;
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) fail(ErrorCode::validation_error, "endpoint is not a URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const std::multimap<std::string, std::string>& headers,
                    const std::string& body, Duration timeout) override {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h(headers.begin(), headers.end());
    auto res = client.Post(parts.path, h, body, "application/json");
    if (!res) throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }
};

}  // namespace

// ---------------------------------------------------------------------------

void FacilitatorMessage::validate() const {
  if (trim_view(narrative).empty()) {
    fail(ErrorCode::validation_error, "facilitator narrative must not be empty");
  }
  if (resolution_declared && pause_requested) {
    fail(ErrorCode::validation_error, "a resolution message cannot also request a pause");
  }
}

void to_json(json& j, const FacilitatorMessage& m) {
  j = json{{"narrative", m.narrative},
           {"pause_requested", m.pause_requested},
           {"resolution_declared", m.resolution_declared},
           {"simulated_roles", m.simulated_roles}};
}

void from_json(const json& j, FacilitatorMessage& m) {
  m.narrative = j.at("narrative").get<std::string>();
  m.pause_requested = j.value("pause_requested", false);
  m.resolution_declared = j.value("resolution_declared", false);
  m.simulated_roles = j.value("simulated_roles", std::vector<Role>{});
}

void BackendConfig::validate() const {
  if (token_limit == 0) fail(ErrorCode::validation_error, "token_limit must be positive");
  if (retry_budget < 0) fail(ErrorCode::validation_error, "retry budget must be non-negative");
  if (request_timeout <= Duration::zero()) {
    fail(ErrorCode::validation_error, "request timeout must be positive");
  }
  if (mode == BackendMode::live) {
    if (endpoint.empty()) fail(ErrorCode::validation_error, "live backend requires an endpoint");
    if (credential_env.empty()) {
      fail(ErrorCode::validation_error, "live backend requires a credential variable name");
    }
  }
}

// ---------------------------------------------------------------------------
// Mock

MockBackend MockBackend::parse(std::istream& in) {
  std::vector<FacilitatorMessage> turns;
  std::vector<std::string> retros;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim_view(line);
    if (content.empty() || content.front() == '#') continue;
    try {
      const json j = json::parse(content);
      const auto kind = j.value("kind", std::string("turn"));
      const auto narrative = j.at("narrative").get<std::string>();
      if (kind == "retrospective") {
        retros.push_back(narrative);
        continue;
      }
      if (kind != "turn") fail(ErrorCode::validation_error, "unknown kind '" + kind + "'");
      FacilitatorMessage m = j.get<FacilitatorMessage>();
      if (!j.contains("pause_requested")) {
        m.pause_requested = has_sentinel_line(narrative, kPauseSentinel);
      }
      if (!j.contains("resolution_declared")) {
        m.resolution_declared = has_sentinel_line(narrative, kResolutionSentinel);
      }
      m.validate();
      turns.push_back(std::move(m));
    } catch (const json::exception& e) {
      fail(ErrorCode::validation_error,
           "mock script line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::validation_error,
           "mock script line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return MockBackend(std::move(turns), std::move(retros));
}

MockBackend MockBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open mock script " + path.string());
  return parse(in);
}

FacilitatorMessage MockBackend::turn(const ChatRequest& request) {
  if (request.turn_index >= turns_.size()) {
    fail(ErrorCode::script_exhausted, "mock script has " + std::to_string(turns_.size()) +
                                          " messages; all have been delivered");
  }
  return turns_[request.turn_index];
}

std::string MockBackend::retrospective(const ChatRequest& request) {
  if (request.retrospective_index >= retrospectives_.size()) {
    fail(ErrorCode::script_exhausted, "mock script has no retrospective entry left");
  }
  return retrospectives_[request.retrospective_index];
}

// ---------------------------------------------------------------------------
// Live

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

ChatCompletionClient::ChatCompletionClient(BackendConfig config,
                                           std::shared_ptr<HttpTransport> transport,
                                           Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](Duration d) { std::this_thread::sleep_for(d); };
  if (!transport_) transport_ = make_http_transport();
}

json ChatCompletionClient::request_body(std::span<const ChatMessage> messages) const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", config_.model},
          {"messages", std::move(msgs)},
          {"max_tokens", config_.max_response_tokens}};
}

std::string ChatCompletionClient::extract_content(const json& response) {
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::backend_error, std::string("unexpected completion payload: ") + e.what());
  }
}

std::string ChatCompletionClient::credential() const {
  const char* value = std::getenv(config_.credential_env.c_str());
  if (value == nullptr || *value == '\0') {
    fail(ErrorCode::auth_error, "credential variable " + config_.credential_env + " is not set");
  }
  return value;
}

ChatCompletionClient::Completion ChatCompletionClient::complete_detailed(
    std::span<const ChatMessage> messages) const {
  const std::multimap<std::string, std::string> headers{
      {"Authorization", "Bearer " + credential()}, {"Accept", "application/json"}};
  const std::string body = request_body(messages).dump();
  Duration backoff = config_.backoff_initial;
  std::string last_failure;
  std::size_t attempts = 0;
  for (int attempt = 0; attempt <= config_.retry_budget; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff);
      backoff *= 2;
    }
    ++attempts;
    HttpResponse res;
    try {
      res = transport_->post(config_.endpoint, headers, body, config_.request_timeout);
    } catch (const TransportError& e) {
      last_failure = e.what();
      continue;
    }
    if (res.status == 401 || res.status == 403) {
      fail(ErrorCode::auth_error, "backend rejected credentials (HTTP " +
                                      std::to_string(res.status) + ")");
    }
    if (retryable_status(res.status)) {
      last_failure = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      fail(ErrorCode::backend_error, "backend returned HTTP " + std::to_string(res.status) +
                                         ": " + res.body.substr(0, 200));
    }
    json parsed;
    try {
      parsed = json::parse(res.body);
    } catch (const json::exception& e) {
      fail(ErrorCode::backend_error, std::string("backend returned invalid JSON: ") + e.what());
    }
    return {extract_content(parsed), attempts};
  }
  fail(ErrorCode::backend_timeout, "backend unavailable after " + std::to_string(attempts) +
                                       " attempts: " + last_failure);
}

FacilitatorMessage interpret_reply(std::string_view reply, std::span<const std::string> addressees) {
  FacilitatorMessage m;
  m.narrative = std::string(reply);
  m.resolution_declared = has_sentinel_line(reply, kResolutionSentinel);
  if (!m.resolution_declared) {
    if (has_sentinel_line(reply, kPauseSentinel)) {
      m.pause_requested = true;
    } else {
      const auto text = trim_view(reply);
      if (!text.empty() && text.back() == '?') {
        const auto para_start = text.rfind("\n\n");
        const auto last = lower(para_start == std::string_view::npos ? text : text.substr(para_start));
        m.pause_requested = std::ranges::any_of(addressees, [&](const std::string& name) {
          return !name.empty() && last.find(lower(name)) != std::string::npos;
        });
      }
    }
  }
  // Role voices announced as "[Human Resources]" or "Human Resources:" at line start.
  for (int k = 0; k <= static_cast<int>(RoleKind::ExternalTeam); ++k) {
    const Role r = Role::of(static_cast<RoleKind>(k));
    const auto name = lower(r.display_name());
    const auto text = lower(reply);
    if (text.find("\n" + name + ":") != std::string::npos ||
        text.find("[" + name + "]") != std::string::npos || text.starts_with(name + ":")) {
      m.simulated_roles.push_back(r);
    }
  }
  return m;
}

FacilitatorMessage LiveBackend::turn(const ChatRequest& request) {
  return interpret_reply(client_.complete(request.messages), request.addressees);
}

std::string LiveBackend::retrospective(const ChatRequest& request) {
  return client_.complete(request.messages);
}

std::unique_ptr<FacilitatorBackend> make_backend(const BackendConfig& config) {
  config.validate();
  if (config.mode == BackendMode::mock) {
    if (config.script_path.empty()) fail(ErrorCode::validation_error, "mock backend needs a script");
    return std::make_unique<MockBackend>(MockBackend::load(config.script_path));
  }
  return std::make_unique<LiveBackend>(ChatCompletionClient(config, make_http_transport()));
}

}  // namespace ttx
