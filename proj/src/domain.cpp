#include "ttx/domain.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "ttx/error.hpp"

namespace ttx {

using nlohmann::json;

std::string slugify(std::string_view name) {
  std::string out;
  bool dash = false;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      if (dash && !out.empty()) out.push_back('-');
      out.push_back(static_cast<char>(std::tolower(c)));
      dash = false;
    } else {
      dash = true;
    }
  }
  return out;
}

std::vector<std::string> shared_components(const ResponsibilityDomain& a,
                                           const ResponsibilityDomain& b) {
  std::vector<std::string> out;
  for (const auto& ia : a.integrations) {
    if (!ia.shared || ia.peer_domain != b.domain_id) continue;
    const bool mirrored = std::ranges::any_of(b.integrations, [&](const Integration& ib) {
      return ib.shared && ib.peer_domain == a.domain_id && ib.component == ia.component;
    });
    if (mirrored && std::ranges::find(out, ia.component) == out.end()) out.push_back(ia.component);
  }
  return out;
}

std::vector<std::string> domain_consistency_issues(const std::vector<ResponsibilityDomain>& domains) {
  std::vector<std::string> issues;
  std::map<std::string, std::string> by_name;
  std::map<std::string, const ResponsibilityDomain*> by_id;
  for (const auto& d : domains) {
    auto [it, inserted] = by_name.emplace(d.name, d.domain_id);
    if (!inserted) {
      issues.push_back("domain name '" + d.name + "' is used by both " + it->second + " and " +
                       d.domain_id);
    }
    by_id[d.domain_id] = &d;
  }
  for (const auto& d : domains) {
    for (const auto& i : d.integrations) {
      if (!i.shared) continue;
      auto peer = by_id.find(i.peer_domain);
      if (peer == by_id.end()) {
        issues.push_back(d.domain_id + ": shared component '" + i.component +
                         "' names unknown domain " + i.peer_domain);
        continue;
      }
      const bool mirrored = std::ranges::any_of(peer->second->integrations, [&](const Integration& o) {
        return o.shared && o.peer_domain == d.domain_id && o.component == i.component;
      });
      if (!mirrored) {
        issues.push_back(d.domain_id + ": shared component '" + i.component +
                         "' is missing from " + i.peer_domain + "'s integrations");
      }
    }
  }
  return issues;
}

MicroScope cross_team_scope(const ResponsibilityDomain& a, const ResponsibilityDomain& b,
                            std::string tooling_context) {
  MicroScope scope;
  scope.systems = {a.name, b.name};
  scope.shared_components = shared_components(a, b);
  scope.tooling_context = std::move(tooling_context);
  return scope;
}

void to_json(json& j, const ResponsibilityDomain& d) {
  json integrations = json::array();
  for (const auto& i : d.integrations) {
    integrations.push_back(
        {{"component", i.component}, {"peer_domain", i.peer_domain}, {"shared", i.shared}});
  }
  j = json{{"domain_id", d.domain_id},
           {"name", d.name},
           {"owning_team", d.owning_team},
           {"components", d.components},
           {"integrations", std::move(integrations)}};
}

void from_json(const json& j, ResponsibilityDomain& d) {
  d.name = j.at("name").get<std::string>();
  d.domain_id = j.value("domain_id", slugify(d.name));
  d.owning_team = j.value("owning_team", std::string{});
  d.components = j.value("components", std::vector<std::string>{});
  d.integrations.clear();
  for (const auto& i : j.value("integrations", json::array())) {
    d.integrations.push_back({i.at("component").get<std::string>(),
                              i.at("peer_domain").get<std::string>(), i.value("shared", false)});
  }
  if (d.name.empty() || d.domain_id.empty()) {
    fail(ErrorCode::validation_error, "domain needs a name and an id");
  }
}

}  // namespace ttx
