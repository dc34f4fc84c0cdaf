#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttx/prompts.hpp"

namespace ttx {

struct Integration {
  std::string component;
  std::string peer_domain;  // domain_id of the other side
  bool shared = false;

  friend bool operator==(const Integration&, const Integration&) = default;
};

// Systems owned by one team, e.g. "Active Directory" with its member-server
// agent shared with the identity-provider team.
struct ResponsibilityDomain {
  std::string domain_id;
  std::string name;
  std::string owning_team;
  std::vector<std::string> components;
  std::vector<Integration> integrations;

  friend bool operator==(const ResponsibilityDomain&, const ResponsibilityDomain&) = default;
};

// Lowercase hyphenated form of a name, used as the default domain id.
std::string slugify(std::string_view name);

// Components both domains declare as shared with each other.
std::vector<std::string> shared_components(const ResponsibilityDomain& a,
                                           const ResponsibilityDomain& b);

// Problems that break the shared-responsibility model across a set of
// domains: duplicate names, and shared integrations not mirrored by the peer.
std::vector<std::string> domain_consistency_issues(const std::vector<ResponsibilityDomain>& domains);

// Cross-team micro-tabletop scope over two domains and their shared parts.
MicroScope cross_team_scope(const ResponsibilityDomain& a, const ResponsibilityDomain& b,
                            std::string tooling_context = {});

void to_json(nlohmann::json& j, const ResponsibilityDomain& d);
void from_json(const nlohmann::json& j, ResponsibilityDomain& d);

}  // namespace ttx
