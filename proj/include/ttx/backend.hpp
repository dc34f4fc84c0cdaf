#pragma once

// Facilitator backends: a deterministic scripted mock and a live
// chat-completion client over HTTP.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttx/clock.hpp"
#include "ttx/exercise.hpp"

namespace ttx {

struct FacilitatorMessage {
  std::string narrative;
  bool pause_requested = false;
  bool resolution_declared = false;
  std::vector<Role> simulated_roles;

  // narrative non-empty; a resolution never pauses.
  void validate() const;

  friend bool operator==(const FacilitatorMessage&, const FacilitatorMessage&) = default;
};

void to_json(nlohmann::json& j, const FacilitatorMessage& m);
void from_json(const nlohmann::json& j, FacilitatorMessage& m);

enum class BackendMode : std::uint8_t { mock, live };

struct BackendConfig {
  BackendMode mode = BackendMode::mock;
  std::string endpoint;        // live: full URL of the chat-completion route
  std::string credential_env;  // live: name of the variable holding the API key
  std::string model = "gpt-4";
  std::uint64_t token_limit = 8192;
  std::uint32_t max_response_tokens = 1024;
  Duration request_timeout = std::chrono::seconds(60);
  int retry_budget = 3;  // retries after the first attempt
  Duration backoff_initial = std::chrono::milliseconds(500);
  std::filesystem::path script_path;  // mock

  void validate() const;
};

struct ChatMessage {
  std::string role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string session_id;
  std::vector<ChatMessage> messages;
  std::size_t turn_index = 0;           // facilitator messages already delivered
  std::size_t retrospective_index = 0;  // retrospectives already delivered
  std::vector<std::string> addressees;  // names a pause question may address
};

class FacilitatorBackend {
 public:
  virtual ~FacilitatorBackend() = default;
  virtual FacilitatorMessage turn(const ChatRequest& request) = 0;
  virtual std::string retrospective(const ChatRequest& request) = 0;
};

// Scripted backend. The script is JSON Lines, one object per message:
//   {"narrative": "...", "pause_requested": true, "resolution_declared": false,
//    "simulated_roles": ["HumanResources"], "kind": "turn"}
// "kind" is "turn" (default) or "retrospective". Missing flags fall back to
// sentinel lines in the narrative ("[PAUSE]", "INCIDENT RESOLVED"). Blank
// lines and lines starting with '#' are ignored.
//
// The cursor is the request's turn_index, so concurrent sessions never share
// position and a reloaded session resumes where it stopped.
class MockBackend final : public FacilitatorBackend {
 public:
  MockBackend(std::vector<FacilitatorMessage> turns, std::vector<std::string> retrospectives)
      : turns_(std::move(turns)), retrospectives_(std::move(retrospectives)) {}

  static MockBackend parse(std::istream& in);
  static MockBackend load(const std::filesystem::path& path);

  FacilitatorMessage turn(const ChatRequest& request) override;
  std::string retrospective(const ChatRequest& request) override;

  std::size_t turn_count() const noexcept { return turns_.size(); }

 private:
  std::vector<FacilitatorMessage> turns_;
  std::vector<std::string> retrospectives_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Thrown by transports for connection failures and timeouts; the client
// retries these.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url,
                            const std::multimap<std::string, std::string>& headers,
                            const std::string& body, Duration timeout) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

using Sleeper = std::function<void(Duration)>;

class ChatCompletionClient {
 public:
  ChatCompletionClient(BackendConfig config, std::shared_ptr<HttpTransport> transport,
                       Sleeper sleeper = {});

  // {"model", "messages": [{"role", "content"}], "max_tokens"}
  nlohmann::json request_body(std::span<const ChatMessage> messages) const;
  // choices[0].message.content, verbatim.
  static std::string extract_content(const nlohmann::json& response);

  // Retries transport errors, HTTP 429 and 5xx with exponential backoff.
  // Authentication failures (401/403) raise auth_error at once; exhausting
  // the retry budget raises backend_timeout.
  struct Completion {
    std::string content;
    std::size_t attempts = 0;
  };
  Completion complete_detailed(std::span<const ChatMessage> messages) const;
  std::string complete(std::span<const ChatMessage> messages) const {
    return complete_detailed(messages).content;
  }

  const BackendConfig& config() const noexcept { return config_; }

 private:
  std::string credential() const;

  BackendConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

// Pause and resolution detection for free-form model output. The narrative is
// kept verbatim. A reply pauses when it carries the pause sentinel or its
// final paragraph ends with a question naming one of the addressees.
FacilitatorMessage interpret_reply(std::string_view reply, std::span<const std::string> addressees);

class LiveBackend final : public FacilitatorBackend {
 public:
  explicit LiveBackend(ChatCompletionClient client) : client_(std::move(client)) {}

  FacilitatorMessage turn(const ChatRequest& request) override;
  std::string retrospective(const ChatRequest& request) override;

 private:
  ChatCompletionClient client_;
};

std::unique_ptr<FacilitatorBackend> make_backend(const BackendConfig& config);

}  // namespace ttx
