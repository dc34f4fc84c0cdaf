#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "ttx/backend.hpp"
#include "ttx/clock.hpp"

namespace ttx {

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path storage_root = "ttx-data";
  BackendConfig backend;
  Duration default_time_budget = std::chrono::minutes(60);
  double default_alpha = 0.5;
  // Name of the variable holding the shared bearer token. Authentication is
  // off when that variable is unset or empty.
  std::string token_env = "TTX_API_TOKEN";
  std::filesystem::path static_dir;  // optional static assets mounted at "/"
  std::string cors_origin;           // optional Access-Control-Allow-Origin value

  // Port range, alpha range, positive budget and backend settings. Storage
  // writability is checked when the store opens.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

// Reads an INI file with [server], [storage], [backend] and [scoring]
// sections, then applies overrides from variables named TTX_<SECTION>_<KEY>
// (for example TTX_SERVER_PORT or TTX_BACKEND_MODE). Unknown keys are
// rejected so typos do not pass silently.
ApiConfig load_api_config(const std::optional<std::filesystem::path>& file,
                          const EnvLookup& env = process_env);

}  // namespace ttx
