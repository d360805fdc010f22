// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shroudlab/odds.hpp"

namespace shroudlab::datagen {

enum class Sport { soccer, handball, basketball, american_football, hockey };

std::string_view to_string(Sport sport);
Sport parse_sport(std::string_view text);

/// League ids starting with "DE-" denote domestic (German) competitions.
bool is_domestic_league(std::string_view league_id);

struct LeagueSpec {
    std::string id;
    std::string name;
    Sport sport = Sport::soccer;
    int n_outcomes = 3;
    double league_effect = 0.0;  // additive price effect
    int events_per_week = 1;
};

struct AgencySpec {
    std::string id;
    bool treated = false;
    odds::PolicyKind policy = odds::PolicyKind::no_shroud;
    std::optional<int> policy_start_week;
    double agency_effect = 0.0;
    /// Effective-price effect for treated post-reform rows without an
    /// active shrouding policy.
    double effect_unshrouded = 0.0;
    /// Effective-price effect once the shrouding policy is active.
    double effect_shrouded = 0.0;
    /// Linear ramp of effect_shrouded from the start week; 0 means a jump.
    int ramp_weeks = 0;
    /// First week the agency quotes (late market entry).
    int first_week = 0;
};

/// lambda_t = trend * (week - centre) + amplitude * sin(2 pi week / period).
struct TimeEffectSpec {
    double trend_per_week = -3e-5;
    double seasonal_amplitude = 0.002;
    int seasonal_period_weeks = 52;
};

struct DGPConfig {
    std::uint64_t master_seed = 42;
    double tax_rate = 0.05;
    int n_weeks = 507;
    int reform_week = 169;
    int weeks_per_quarter = 13;
    double price_level = 0.0632;  // mu
    std::vector<LeagueSpec> leagues;
    std::vector<AgencySpec> agencies;
    TimeEffectSpec time_effects;
    double noise_sd = 0.01;
    double cluster_shock_sd = 0.003;  // agency x quarter
    double dirichlet_concentration = 3.0;
    /// Events whose favourite exceeds this probability are re-drawn so that
    /// every agency can quote odds above 1.
    double max_outcome_probability = 0.85;
    int max_retries = 64;
    /// Placebo switch: false forces every injected effect to zero.
    bool inject_effects = true;
    bool retain_probabilities = true;

    /// Throws ValidationError naming the offending field.
    void validate() const;

    int quarter_of(int week) const noexcept { return week / weeks_per_quarter; }
    int reform_quarter() const noexcept { return quarter_of(reform_week); }
    double time_effect(int week) const;

    /// Ten treated agencies (2 none / 6 winnings / 2 wager, staggered
    /// adoption), 20 controls, 16 leagues, 39 quarters, about 1e6 rows.
    static DGPConfig calibrated();
};

struct PanelRow {
    std::string agency_id;
    std::uint64_t event_id = 0;
    int week = 0;
    int quarter = 0;
    std::string league_id;
    Sport sport = Sport::soccer;
    int n_outcomes = 2;
    bool treated = false;
    bool post = false;
    odds::PolicyKind policy = odds::PolicyKind::no_shroud;
    bool policy_active = false;
    double posted_price = 0.0;
    double effective_price = 0.0;
    std::vector<double> true_probabilities;  // audit only, not part of the CSV contract
};

bool policy_active(const AgencySpec& agency, int week, const DGPConfig& config);

/// Additive effective-price effect injected for an agency in a week.
double injected_effect(const AgencySpec& agency, int week, const DGPConfig& config);

/// Deterministic in config.master_seed; rows ordered by agency (config
/// order), week, event.
std::vector<PanelRow> generate_panel(const DGPConfig& config);

/// Keeps rows whose effective price lies within the nearest-rank
/// [lower, upper] quantiles of their quarter.
std::vector<PanelRow> trim_quantiles(const std::vector<PanelRow>& rows, double lower, double upper);

// CSV: agency_id,event_id,week,quarter,league_id,sport,n_outcomes,treated,
// post,policy,policy_active,posted_price,effective_price[,true_probabilities]
void write_panel(std::ostream& out, const std::vector<PanelRow>& rows, bool with_probabilities = false);
void write_panel(const std::string& path, const std::vector<PanelRow>& rows,
                 bool with_probabilities = false);
std::vector<PanelRow> read_panel_text(std::string_view text);
std::vector<PanelRow> read_panel(const std::string& path);

}  // namespace shroudlab::datagen
