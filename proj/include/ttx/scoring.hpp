#pragma once

// Team preparedness, pairwise preparedness delta and the unified
// preparedness-and-balance score (UPBS), plus alpha sweeps over it.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ttx::scoring {

struct TeamProfile {
  std::string team_id;
  double skills = 0;        // S
  double knowledge = 0;     // K
  double resources = 0;     // R
  double cohesion = 0;      // C
  double adaptability = 0;  // A
  double experience = 0;    // E
  double scale_max = 10;

  // Throws validation_error naming the first offending factor.
  void validate() const;
  double factor_sum() const {
    return skills + knowledge + resources + cohesion + adaptability + experience;
  }
};

struct PreparednessScore {
  std::string team_id;
  double value = 0;       // in [0, 1]
  double p_max_used = 0;  // 6 * scale_max
};

struct DeltaReport {
  std::string team_a;
  std::string team_b;
  double delta = 0;  // positive when team_a is more prepared
};

struct UpbsResult {
  double alpha = 0;
  double beta = 0;
  double p_avg = 0;
  double mean_abs_delta = 0;
  double score = 0;
};

PreparednessScore preparedness(const TeamProfile& profile);
DeltaReport preparedness_delta(const PreparednessScore& p1, const PreparednessScore& p2);

// Mean of |P_i - P_j| over all unordered pairs; 0 for a single team.
double mean_abs_delta(std::span<const TeamProfile> profiles);
double mean_abs_delta(std::span<const PreparednessScore> scores);

UpbsResult upbs(std::span<const TeamProfile> profiles, double alpha);
std::vector<UpbsResult> upbs_sweep(std::span<const TeamProfile> profiles,
                                   std::span<const double> alphas);

// n+1 evenly spaced weights from 0 to 1 inclusive, computed as i/n.
std::vector<double> alpha_grid(int steps);

struct Configuration {
  std::string name;
  std::vector<TeamProfile> teams;
};

struct ScoreRow {
  std::string configuration;
  UpbsResult result;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;  // configuration-major, alpha-minor
};

ScoreTable emit_score_table(std::span<const Configuration> configurations,
                            std::span<const double> alphas);

// configuration,alpha,p_avg,mean_abs_delta,upbs
void write_score_csv(std::ostream& out, const ScoreTable& table, int precision = 6);

// team_id,S,K,R,C,A,E,scale_max with a required header row. Errors carry the
// 1-based line number. A leading "configuration" column is accepted by
// read_configurations_csv for multi-configuration files.
std::vector<TeamProfile> parse_profiles_csv(std::istream& in);
std::vector<Configuration> read_configurations_csv(std::istream& in);

// Fixed-point text with `decimals` digits, e.g. format_score(22.0/60) == "0.367".
std::string format_score(double value, int decimals = 3);

}  // namespace ttx::scoring
