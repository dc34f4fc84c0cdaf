#pragma once

#include <unistd.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ttx/clock.hpp"
#include "ttx/exercise.hpp"

namespace testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "ttx-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

inline CommandResult run_command(const std::string& command) {
  CommandResult r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline ttx::Timestamp at(const std::string& text) { return ttx::parse_timestamp(text); }

inline ttx::Timestamp t0() { return at("2024-01-01T10:00:00.000Z"); }

inline ttx::ExerciseSession sample_session(const std::string& id = "s-1",
                                           ttx::Duration budget = std::chrono::minutes(60),
                                           ttx::Timestamp start = t0()) {
  ttx::Scenario sc;
  sc.id = "ransomware-1";
  sc.title = "Ransomware on the file tier";
  sc.organization = "Example Corp";
  sc.attack_type = "ransomware";
  sc.domains = {"File Services"};
  sc.inject_seeds = {"encrypted shares", "ransom note"};
  return ttx::create_session(sc, {{"alice", "Alice", std::nullopt}, {"bob", "Bob", std::nullopt}},
                             budget, id, start);
}

}  // namespace testing
