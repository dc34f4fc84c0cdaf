#include <doctest.h>

#include "support.hpp"

namespace {

const std::string cli = TTX_CLI;
const std::string fixtures = TTX_FIXTURES;

std::string quote(const std::string& s) { return "'" + s + "'"; }

testing::CommandResult run_mock(const testing::TempDir& dir, const std::string& storage,
                                const std::string& transcript, const std::string& script = fixtures + "/mock/ad_micro.jsonl") {
  return testing::run_command(cli + " run --script " + quote(script) + " --storage " + quote((dir / storage).string()) +
                              " --responses " + quote(fixtures + "/mock/ad_micro.responses.txt") +
                              " --transcript-out " + quote((dir / transcript).string()) + " 2>/dev/null");
}

}  // namespace

TEST_CASE("score prints preparedness, delta and UPBS") {
  const auto r = testing::run_command(cli + " score " + quote(fixtures + "/profiles/two_teams.csv") + " -a 1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("P(blue) = 0.833") != std::string::npos);
  CHECK(r.output.find("P(red) = 0.467") != std::string::npos);
  CHECK(r.output.find("dP(blue, red) = 0.367") != std::string::npos);
  CHECK(r.output.find("UPBS(alpha=1.00) = 0.650") != std::string::npos);
}

TEST_CASE("malformed profiles fail with the line number") {
  const auto r = testing::run_command(cli + " score " + quote(fixtures + "/profiles/malformed.csv") + " 2>&1");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("line 3") != std::string::npos);
  CHECK(testing::run_command(cli + " score /nonexistent.csv 2>/dev/null").exit_code == 1);
  CHECK(testing::run_command(cli + " score " + quote(fixtures + "/profiles/two_teams.csv") + " -a 3 2>/dev/null")
            .exit_code == 1);
}

TEST_CASE("sweep over perfect preparation stays at one") {
  const auto r = testing::run_command(cli + " sweep " + quote(fixtures + "/profiles/perfect.csv") + " --steps 10 --precision 3");
  CHECK(r.exit_code == 0);
  std::istringstream lines(r.output);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "configuration,alpha,p_avg,mean_abs_delta,upbs");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.ends_with(",1.000,0.000,1.000"));
  }
  CHECK(rows == 11);
  const auto builtin = testing::run_command(cli + " sweep --alphas 0 0.5 1");
  CHECK(builtin.exit_code == 0);
  CHECK(builtin.output.find("Perfect prep,0.500000,1.000000,0.000000,1.000000") != std::string::npos);
}

TEST_CASE("scripted runs are reproducible byte for byte") {
  testing::TempDir dir;
  const auto a = run_mock(dir, "store-a", "a.jsonl");
  const auto b = run_mock(dir, "store-b", "b.jsonl");
  REQUIRE(a.exit_code == 0);
  CHECK(a.output == b.output);
  const auto ta = testing::slurp(dir / "a.jsonl");
  CHECK_FALSE(ta.empty());
  CHECK(ta == testing::slurp(dir / "b.jsonl"));
  CHECK(a.output.find("-- phase: End") != std::string::npos);
  CHECK(a.output.find("-- action item AI-000001") != std::string::npos);
  CHECK(a.output.find("with 2 action item(s)") != std::string::npos);
}

TEST_CASE("an exhausted script is a backend failure") {
  testing::TempDir dir;
  testing::spit(dir / "short.jsonl", "{\"narrative\": \"Only one message.\"}\n");
  const auto r = run_mock(dir, "store", "t.jsonl", (dir / "short.jsonl").string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("retro over a stored session") {
  testing::TempDir dir;
  REQUIRE(run_mock(dir, "store", "t.jsonl").exit_code == 0);
  // The run already consumed the script's retrospective; give the second one its own entry.
  auto script = testing::slurp(fixtures + "/mock/ad_micro.jsonl");
  script += "{\"kind\": \"retrospective\", \"narrative\": \"Critical: Lockout alerts went unread.\\nImprovement: Route lockout bursts to the on-call pager.\"}\n";
  testing::spit(dir / "two.jsonl", script);
  const auto base = cli + " retro session-0001 --script " + quote((dir / "two.jsonl").string()) + " --storage " +
                    quote((dir / "store").string());
  const auto preview = testing::run_command(base + " 2>/dev/null");
  CHECK(preview.exit_code == 0);
  CHECK(preview.output.starts_with("-\n  Critical: Lockout alerts went unread."));
  const auto stored = testing::run_command(base + " --domain 'Active Directory' --store 2>/dev/null");
  CHECK(stored.exit_code == 0);
  CHECK(stored.output.starts_with("AI-000003\n"));
  CHECK(testing::run_command(cli + " retro session-0099 --script " + quote((dir / "two.jsonl").string()) +
                             " --storage " + quote((dir / "store").string()) + " 2>/dev/null")
            .exit_code == 1);
}
