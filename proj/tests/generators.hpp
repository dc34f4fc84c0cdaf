#pragma once

// Random but always-legal sessions for round-trip and replay properties.

#include <string>

#include "oracles.hpp"
#include "support.hpp"
#include "ttx/error.hpp"
#include "ttx/exercise.hpp"

namespace testing {

inline ttx::ExerciseSession random_session(oracle::Gen& g, const std::string& id) {
  using namespace ttx;
  Scenario sc;
  sc.id = "scn-" + g.word();
  sc.title = g.sentence(5);
  sc.organization = g.word();
  sc.attack_type = g.pick(std::vector<std::string>{"ransomware", "phishing", "insider", "ddos"});
  sc.scope = g.coin() ? ScenarioScope::Micro : ScenarioScope::Full;
  for (int i = g.integer(0, 3); i > 0; --i) sc.domains.push_back(g.word());
  for (int i = g.integer(0, 3); i > 0; --i) sc.inject_seeds.push_back(g.sentence(6));
  if (g.coin()) sc.tooling_context = g.sentence(12);

  std::vector<Participant> people;
  const int n = g.integer(1, 4);
  for (int i = 0; i < n; ++i) people.push_back({"p" + std::to_string(i), g.word(), std::nullopt});

  ManualClock clock(t0() + std::chrono::seconds(g.integer(0, 86400)),
                    std::chrono::milliseconds(g.integer(1, 90000)));
  auto s = create_session(sc, people, std::chrono::minutes(g.integer(1, 90)), id, clock.tick());

  const std::vector<Role> roles = {Role::of(RoleKind::IncidentCommander), Role::of(RoleKind::LegalAdvisor),
                                   Role::of(RoleKind::Facilitator), Role::custom("Night " + g.word()),
                                   Role::of(RoleKind::HumanResources)};
  const int ops = g.integer(0, 60);
  for (int k = 0; k < ops && s.phase() != Phase::End; ++k) {
    try {
      switch (g.integer(0, 7)) {
        case 0:
        case 1:
          s.advance(kAllSignals[static_cast<std::size_t>(g.integer(0, 3))], clock.tick());
          break;
        case 2:
          s.assign_role(g.pick(people).id, g.pick(roles), clock.tick());
          break;
        case 3:
          s.record_inject({{"narrative", g.sentence(30) + (g.coin() ? "\né—\"q\"" : "")},
                           {"pause_requested", g.coin()}},
                          clock.tick());
          break;
        case 4:
          s.record_human_response(g.pick(people).id, g.sentence(15), clock.tick());
          break;
        case 5:
          s.declare_resolution("Facilitator", g.sentence(4), clock.tick());
          break;
        case 6:
          s.record_retrospective(g.sentence(40), clock.tick());
          break;
        default:
          s.record_action_item({{"item_id", "AI-" + std::to_string(g.integer(1, 999))},
                                {"finding", g.sentence(5)}},
                               clock.tick());
          break;
      }
    } catch (const Error&) {
      // Refused operations leave no trace; keep walking.
    }
  }
  return s;
}

}  // namespace testing
