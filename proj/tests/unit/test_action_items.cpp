#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "ttx/action_items.hpp"
#include "ttx/error.hpp"

using namespace ttx;

TEST_CASE("markdown review with emphasis, numbering and wrapped lines") {
  const auto text = testing::slurp(std::string(TTX_FIXTURES) + "/retro/markdown_review.md");
  const auto r = parse_action_items(text);
  REQUIRE(r.items.size() == 3);
  CHECK(r.warnings.empty());
  CHECK(r.items[0].finding ==
        "The first user report sat in the shared mailbox for forty minutes before anyone on the "
        "security rota opened it.");
  CHECK(r.items[0].improvement ==
        "Forward user phishing reports straight into the incident queue with a paging rule "
        "outside office hours.");
  CHECK(r.items[0].measurable_criterion ==
        "Median time from report to triage under 10 minutes for a month.");
  CHECK(r.items[1].measurable_criterion.empty());
  CHECK(r.items[2].improvement == "Assign a communications owner for every severity-two incident.");
  for (const auto& item : r.items) CHECK(item.status == ActionStatus::open);
}

TEST_CASE("plain labelled blocks") {
  const auto r = parse_action_items(
      "Critical: MFA fatigue prompts were approved.\nImprovement: Enable number matching.\n"
      "critical: no lockout.\nIMPROVEMENT: add lockout after five pushes.\n");
  REQUIRE(r.items.size() == 2);
  CHECK(r.items[1].finding == "no lockout.");
  CHECK(r.items[1].improvement == "add lockout after five pushes.");
}

TEST_CASE("malformed blocks produce warnings instead of items") {
  const auto orphan = parse_action_items("Critical: backups untested.\n\nCritical: x\nImprovement: y\n");
  REQUIRE(orphan.items.size() == 1);
  REQUIRE(orphan.warnings.size() == 1);
  CHECK(orphan.warnings[0].find("line 1") != std::string::npos);

  const auto stray = parse_action_items("Improvement: rotate keys\n");
  CHECK(stray.items.empty());
  CHECK(stray.warnings.size() == 1);

  const auto none = parse_action_items("Great job everyone.");
  CHECK(none.items.empty());
  CHECK(none.warnings == std::vector<std::string>{"no Critical/Improvement blocks found"});

  const auto empty_improvement = parse_action_items("Critical: a\nImprovement:\n");
  CHECK(empty_improvement.items.empty());
  CHECK_FALSE(empty_improvement.warnings.empty());
}

TEST_CASE("render and parse are inverse on generated items") {
  oracle::Gen g(31);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<ActionItem> items;
    const int n = g.integer(1, 6);
    for (int i = 0; i < n; ++i) {
      ActionItem item;
      item.finding = g.word() + " " + g.word() + " " + g.word();
      item.improvement = g.word() + " " + g.word();
      if (g.coin()) item.measurable_criterion = g.word() + " within " + std::to_string(g.integer(1, 90)) + " days";
      items.push_back(item);
    }
    const auto parsed = parse_action_items(render_action_items(items));
    CHECK(parsed.warnings.empty());
    CHECK(parsed.items == items);
    // Idempotent on its own output.
    CHECK(parse_action_items(render_action_items(parsed.items)).items == parsed.items);
  }
}

TEST_CASE("status transitions") {
  using S = ActionStatus;
  CHECK(status_transition_allowed(S::open, S::in_progress, false));
  CHECK(status_transition_allowed(S::open, S::done, false));
  CHECK(status_transition_allowed(S::in_progress, S::done, false));
  CHECK_FALSE(status_transition_allowed(S::done, S::in_progress, false));
  CHECK_FALSE(status_transition_allowed(S::done, S::open, false));
  CHECK(status_transition_allowed(S::done, S::open, true));
  CHECK(status_transition_allowed(S::done, S::done, false));
  for (S s : {S::open, S::in_progress, S::done}) CHECK(parse_action_status(to_string(s)) == s);
  CHECK_FALSE(parse_action_status("closed").has_value());
}

TEST_CASE("action item JSON") {
  ActionItem item{"AI-000007", "finding", "fix", "measure", std::string("active-directory"),
                  ActionStatus::in_progress, "session-0001"};
  const nlohmann::json j = item;
  CHECK(j.get<ActionItem>() == item);
  CHECK(j["status"] == "in_progress");
  CHECK_THROWS_AS((nlohmann::json{{"finding", ""}, {"improvement", "x"}}.get<ActionItem>()), Error);
}
