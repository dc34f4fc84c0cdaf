#pragma once

// HTTP surface over the engine. Each handler loads the session from the
// store, applies one engine operation to a copy, appends the new events and
// only then answers, so a restart never loses an acknowledged event.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ttx/backend.hpp"
#include "ttx/clock.hpp"
#include "ttx/config.hpp"
#include "ttx/error.hpp"
#include "ttx/persistence.hpp"

namespace httplib {
class Server;
}

namespace ttx {

int http_status(ErrorCode code) noexcept;
nlohmann::json error_body(std::string_view code, std::string_view message);

class Service {
 public:
  // A null backend is built from config.backend.
  Service(ApiConfig config, std::shared_ptr<FacilitatorBackend> backend = nullptr,
          ClockFn clock = system_now);

  const ApiConfig& config() const noexcept { return config_; }
  FileStore& store() noexcept { return store_; }

  // Bodies follow the route documentation in the README. Every call either
  // returns a JSON document or throws ttx::Error.
  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json assign_role(const std::string& id, const nlohmann::json& body);
  nlohmann::json advance(const std::string& id, const nlohmann::json& body);
  nlohmann::json turn(const std::string& id, const nlohmann::json& body);
  nlohmann::json declare_resolution(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_session(const std::string& id);
  nlohmann::json transcript(const std::string& id);
  nlohmann::json retrospective(const std::string& id, const nlohmann::json& body);
  nlohmann::json score_upbs(const nlohmann::json& body) const;
  nlohmann::json action_items(const std::optional<std::string>& domain) const;
  nlohmann::json update_action_item(const std::string& id, const nlohmann::json& body);
  nlohmann::json create_domain(const nlohmann::json& body);
  nlohmann::json list_domains() const;

 private:
  std::shared_ptr<std::mutex> session_mutex(const std::string& id);

  template <typename F>
  nlohmann::json mutate(const std::string& id, const nlohmann::json& body, F&& op);

  ApiConfig config_;
  FileStore store_;
  std::shared_ptr<FacilitatorBackend> backend_;
  ClockFn clock_;
  std::mutex registry_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>, std::less<>> session_mu_;
  std::mutex create_mu_;
};

// Registers every route on `server`. When `bearer_token` is non-empty each
// request other than GET /healthz must carry "Authorization: Bearer <token>".
void install_routes(httplib::Server& server, Service& service, std::string bearer_token = {});

// Builds the service from `config`, reads the bearer token from the variable
// named by config.token_env and blocks serving requests.
void serve(const ApiConfig& config);

}  // namespace ttx
