#include "ttx/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ttx/error.hpp"

namespace ttx {

namespace {

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    fail(ErrorCode::validation_error, key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    fail(ErrorCode::validation_error, key + ": expected a number, got '" + text + "'");
  }
  return v;
}

struct Setting {
  std::string_view section;
  std::string_view key;
  void (*apply)(ApiConfig&, const std::string& name, const std::string& value);
};

// clang-format off
const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
    {"server", "host", [](ApiConfig& c, const std::string&, const std::string& v) { c.host = v; }},
    {"server", "port", [](ApiConfig& c, const std::string& n, const std::string& v) {
       c.port = static_cast<int>(parse_integer(n, v)); }},
    {"server", "token_env", [](ApiConfig& c, const std::string&, const std::string& v) { c.token_env = v; }},
    {"server", "static_dir", [](ApiConfig& c, const std::string&, const std::string& v) { c.static_dir = v; }},
    {"server", "cors_origin", [](ApiConfig& c, const std::string&, const std::string& v) { c.cors_origin = v; }},
    {"server", "time_budget_minutes", [](ApiConfig& c, const std::string& n, const std::string& v) {
       c.default_time_budget = std::chrono::minutes(parse_integer(n, v)); }},
    {"storage", "root", [](ApiConfig& c, const std::string&, const std::string& v) { c.storage_root = v; }},
    {"backend", "mode", [](ApiConfig& c, const std::string& n, const std::string& v) {
       if (v == "mock") c.backend.mode = BackendMode::mock;
       else if (v == "live") c.backend.mode = BackendMode::live;
       else fail(ErrorCode::validation_error, n + ": expected 'mock' or 'live'"); }},
    {"backend", "endpoint", [](ApiConfig& c, const std::string&, const std::string& v) { c.backend.endpoint = v; }},
    {"backend", "credential_env", [](ApiConfig& c, const std::string&, const std::string& v) {
       c.backend.credential_env = v; }},
    {"backend", "model", [](ApiConfig& c, const std::string&, const std::string& v) { c.backend.model = v; }},
    {"backend", "token_limit", [](ApiConfig& c, const std::string& n, const std::string& v) {
       const auto x = parse_integer(n, v);
       if (x <= 0) fail(ErrorCode::validation_error, n + " must be positive");
       c.backend.token_limit = static_cast<std::uint64_t>(x); }},
    {"backend", "max_response_tokens", [](ApiConfig& c, const std::string& n, const std::string& v) {
       const auto x = parse_integer(n, v);
       if (x <= 0) fail(ErrorCode::validation_error, n + " must be positive");
       c.backend.max_response_tokens = static_cast<std::uint32_t>(x); }},
    {"backend", "timeout_ms", [](ApiConfig& c, const std::string& n, const std::string& v) {
       c.backend.request_timeout = Duration(parse_integer(n, v)); }},
    {"backend", "retry_budget", [](ApiConfig& c, const std::string& n, const std::string& v) {
       c.backend.retry_budget = static_cast<int>(parse_integer(n, v)); }},
    {"backend", "backoff_ms", [](ApiConfig& c, const std::string& n, const std::string& v) {
       c.backend.backoff_initial = Duration(parse_integer(n, v)); }},
    {"backend", "script", [](ApiConfig& c, const std::string&, const std::string& v) { c.backend.script_path = v; }},
    {"scoring", "default_alpha", [](ApiConfig& c, const std::string& n, const std::string& v) {
       c.default_alpha = parse_real(n, v); }},
  };
  return table;
}
// clang-format on

const Setting* find_setting(std::string_view section, std::string_view key) {
  for (const auto& s : settings()) {
    if (s.section == section && s.key == key) return &s;
  }
  return nullptr;
}

std::string env_name(std::string_view section, std::string_view key) {
  std::string out = "TTX_";
  for (char c : section) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  out += '_';
  for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

void ApiConfig::validate() const {
  if (port < 0 || port > 65535) {
    fail(ErrorCode::validation_error, "port must be in 0..65535");
  }
  if (!(default_alpha >= 0.0 && default_alpha <= 1.0)) {
    fail(ErrorCode::validation_error, "default alpha must lie in [0, 1]");
  }
  if (default_time_budget <= Duration::zero()) {
    fail(ErrorCode::validation_error, "default time budget must be positive");
  }
  if (storage_root.empty()) fail(ErrorCode::validation_error, "storage root must be set");
  backend.validate();
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

ApiConfig load_api_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  ApiConfig config;
  if (file) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(file->string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorCode::validation_error, "config file: " + std::string(e.what()));
    }
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty()) {
        fail(ErrorCode::validation_error, "config key '" + section + "' must sit inside a section");
      }
      for (const auto& [key, value] : body) {
        const Setting* s = find_setting(section, key);
        if (s == nullptr) {
          fail(ErrorCode::validation_error, "unknown config key [" + section + "] " + key);
        }
        s->apply(config, "[" + section + "] " + key, value.data());
      }
    }
  }
  if (env) {
    for (const auto& s : settings()) {
      const auto name = env_name(s.section, s.key);
      if (auto value = env(name)) s.apply(config, name, *value);
    }
  }
  config.validate();
  return config;
}

}  // namespace ttx
