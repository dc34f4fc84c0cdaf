#include "ttx/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "ttx/error.hpp"

namespace ttx::scoring {

namespace {

void check_factor(std::string_view name, double value, double scale_max,
                  const std::string& team) {
  if (!std::isfinite(value) || value < 0 || value > scale_max) {
    std::ostringstream msg;
    msg << "team '" << team << "': factor " << name << " = " << value
        << " is outside [0, " << scale_max << "]";
    fail(ErrorCode::validation_error, msg.str());
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorCode::validation_error,
         "alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

void check_unit(const PreparednessScore& p) {
  if (!(p.value >= 0.0 && p.value <= 1.0)) {
    fail(ErrorCode::validation_error, "preparedness for team '" + p.team_id +
                                          "' is outside [0, 1]");
  }
}

// Running mean; returns the input exactly when every element is equal.
double stable_mean(std::span<const double> values) {
  double mean = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mean += (values[i] - mean) / static_cast<double>(i + 1);
  }
  return mean;
}

// Sum over unordered pairs of |x_i - x_j| via sorted gaps: the gap between the
// k-th and (k+1)-th smallest values is crossed by k * (n - k) pairs.
double mean_abs_pairwise(std::vector<double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  std::ranges::sort(values);
  double total = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double gap = values[k] - values[k - 1];
    total += gap * static_cast<double>(k * (n - k));
  }
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  return total / pairs;
}

std::vector<double> values_of(std::span<const PreparednessScore> scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s.value);
  return out;
}

std::vector<PreparednessScore> score_all(std::span<const TeamProfile> profiles) {
  if (profiles.empty()) fail(ErrorCode::validation_error, "at least one team profile is required");
  std::vector<PreparednessScore> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back(preparedness(p));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  fail(ErrorCode::validation_error, "line " + std::to_string(line_no) + ": " + what);
}

double parse_number(const std::string& cell, std::size_t line_no, std::string_view column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    parse_error(line_no, "column " + std::string(column) + ": '" + cell + "' is not a number");
  }
}

constexpr std::string_view kFactorColumns[] = {"team_id", "s", "k", "r", "c", "a", "e", "scale_max"};

// Parses rows after validating the header; `with_configuration` expects an
// extra leading configuration column.
template <typename RowFn>
void read_table(std::istream& in, bool& has_configuration, RowFn&& on_row) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    auto cells = split_csv(content);
    if (!header_seen) {
      std::vector<std::string> names;
      for (auto& c : cells) names.push_back(lower(c));
      has_configuration = !names.empty() && names.front() == "configuration";
      const std::size_t offset = has_configuration ? 1 : 0;
      bool ok = names.size() == std::size(kFactorColumns) + offset;
      for (std::size_t i = 0; ok && i < std::size(kFactorColumns); ++i) {
        ok = names[i + offset] == kFactorColumns[i];
      }
      if (!ok) {
        parse_error(line_no,
                    "expected header 'team_id,S,K,R,C,A,E,scale_max' "
                    "(optionally preceded by 'configuration')");
      }
      header_seen = true;
      continue;
    }
    const std::size_t offset = has_configuration ? 1 : 0;
    if (cells.size() != std::size(kFactorColumns) + offset) {
      parse_error(line_no, "expected " + std::to_string(std::size(kFactorColumns) + offset) +
                               " columns, found " + std::to_string(cells.size()));
    }
    TeamProfile p;
    p.team_id = cells[offset];
    if (p.team_id.empty()) parse_error(line_no, "team_id must not be empty");
    double* fields[] = {&p.skills,       &p.knowledge,  &p.resources, &p.cohesion,
                        &p.adaptability, &p.experience, &p.scale_max};
    for (std::size_t i = 0; i < std::size(fields); ++i) {
      *fields[i] = parse_number(cells[offset + 1 + i], line_no, kFactorColumns[i + 1]);
    }
    try {
      p.validate();
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
    on_row(has_configuration ? cells[0] : std::string("default"), std::move(p));
  }
  if (!header_seen) parse_error(line_no + 1, "missing header row");
}

}  // namespace

void TeamProfile::validate() const {
  if (!std::isfinite(scale_max) || scale_max <= 0) {
    fail(ErrorCode::validation_error,
         "team '" + team_id + "': scale_max must be positive");
  }
  check_factor("S", skills, scale_max, team_id);
  check_factor("K", knowledge, scale_max, team_id);
  check_factor("R", resources, scale_max, team_id);
  check_factor("C", cohesion, scale_max, team_id);
  check_factor("A", adaptability, scale_max, team_id);
  check_factor("E", experience, scale_max, team_id);
}

PreparednessScore preparedness(const TeamProfile& profile) {
  profile.validate();
  const double p_max = 6.0 * profile.scale_max;
  return {profile.team_id, profile.factor_sum() / p_max, p_max};
}

DeltaReport preparedness_delta(const PreparednessScore& p1, const PreparednessScore& p2) {
  check_unit(p1);
  check_unit(p2);
  return {p1.team_id, p2.team_id, p1.value - p2.value};
}

double mean_abs_delta(std::span<const PreparednessScore> scores) {
  if (scores.empty()) fail(ErrorCode::validation_error, "at least one team is required");
  for (const auto& s : scores) check_unit(s);
  return mean_abs_pairwise(values_of(scores));
}

double mean_abs_delta(std::span<const TeamProfile> profiles) {
  return mean_abs_delta(std::span<const PreparednessScore>(score_all(profiles)));
}

UpbsResult upbs(std::span<const TeamProfile> profiles, double alpha) {
  check_alpha(alpha);
  const auto scores = score_all(profiles);
  const auto values = values_of(scores);
  UpbsResult r;
  r.alpha = alpha;
  r.beta = 1.0 - alpha;
  r.p_avg = stable_mean(values);
  r.mean_abs_delta = mean_abs_pairwise(values);
  r.score = r.alpha * r.p_avg + r.beta * (1.0 - r.mean_abs_delta);
  return r;
}

std::vector<UpbsResult> upbs_sweep(std::span<const TeamProfile> profiles,
                                   std::span<const double> alphas) {
  for (double a : alphas) check_alpha(a);
  std::vector<UpbsResult> out;
  out.reserve(alphas.size());
  for (double a : alphas) out.push_back(upbs(profiles, a));
  return out;
}

std::vector<double> alpha_grid(int steps) {
  if (steps <= 0) fail(ErrorCode::validation_error, "alpha grid needs at least one step");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) out.push_back(static_cast<double>(i) / steps);
  return out;
}

ScoreTable emit_score_table(std::span<const Configuration> configurations,
                            std::span<const double> alphas) {
  if (configurations.empty()) {
    fail(ErrorCode::validation_error, "at least one configuration is required");
  }
  ScoreTable table;
  for (const auto& config : configurations) {
    for (const auto& r : upbs_sweep(config.teams, alphas)) {
      table.rows.push_back({config.name, r});
    }
  }
  return table;
}

void write_score_csv(std::ostream& out, const ScoreTable& table, int precision) {
  out << "configuration,alpha,p_avg,mean_abs_delta,upbs\n";
  for (const auto& row : table.rows) {
    out << row.configuration << ',' << format_score(row.result.alpha, precision) << ','
        << format_score(row.result.p_avg, precision) << ','
        << format_score(row.result.mean_abs_delta, precision) << ','
        << format_score(row.result.score, precision) << '\n';
  }
}

std::vector<TeamProfile> parse_profiles_csv(std::istream& in) {
  std::vector<TeamProfile> out;
  bool has_configuration = false;
  read_table(in, has_configuration, [&](const std::string&, TeamProfile p) {
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Configuration> read_configurations_csv(std::istream& in) {
  std::vector<Configuration> out;
  bool has_configuration = false;
  read_table(in, has_configuration, [&](const std::string& name, TeamProfile p) {
    auto it = std::ranges::find(out, name, &Configuration::name);
    if (it == out.end()) {
      out.push_back({name, {}});
      it = std::prev(out.end());
    }
    it->teams.push_back(std::move(p));
  });
  return out;
}

std::string format_score(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

}  // namespace ttx::scoring
