// SPDX-License-Identifier: Apache-2.0
#include "shroudlab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include "shroudlab/error.hpp"
#include "shroudlab/rng.hpp"

namespace shroudlab::datagen {

namespace {

// Stream tags for the keyed generator.
constexpr std::uint64_t kEventStream = 1;
constexpr std::uint64_t kShockStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ValidationError(field + ": " + what);
}

}  // namespace

std::string_view to_string(Sport sport) {
    switch (sport) {
        case Sport::soccer: return "soccer";
        case Sport::handball: return "handball";
        case Sport::basketball: return "basketball";
        case Sport::american_football: return "american_football";
        case Sport::hockey: return "hockey";
    }
    return "soccer";
}

Sport parse_sport(std::string_view text) {
    if (text == "soccer") return Sport::soccer;
    if (text == "handball") return Sport::handball;
    if (text == "basketball") return Sport::basketball;
    if (text == "american_football") return Sport::american_football;
    if (text == "hockey") return Sport::hockey;
    throw ValidationError("unknown sport '" + std::string(text) + "'");
}

bool is_domestic_league(std::string_view league_id) { return league_id.starts_with("DE-"); }

double DGPConfig::time_effect(int week) const {
    const double centre = 0.5 * static_cast<double>(n_weeks - 1);
    double lambda = time_effects.trend_per_week * (static_cast<double>(week) - centre);
    if (time_effects.seasonal_period_weeks > 0) {
        lambda += time_effects.seasonal_amplitude *
                  std::sin(2.0 * std::numbers::pi * static_cast<double>(week) /
                           static_cast<double>(time_effects.seasonal_period_weeks));
    }
    return lambda;
}

void DGPConfig::validate() const {
    require(n_weeks > 0, "n_weeks", "must be positive");
    require(weeks_per_quarter > 0, "weeks_per_quarter", "must be positive");
    require(reform_week > 0 && reform_week < n_weeks, "reform_week",
            "must lie strictly inside [0, n_weeks)");
    require(reform_week >= 8 * weeks_per_quarter, "reform_week",
            "needs at least 8 pre-reform quarters");
    require(tax_rate >= 0.0 && tax_rate < 1.0, "tax_rate", "must lie in [0, 1)");
    require(noise_sd >= 0.0, "noise_sd", "must be non-negative");
    require(cluster_shock_sd >= 0.0, "cluster_shock_sd", "must be non-negative");
    require(dirichlet_concentration > 0.0, "dirichlet_concentration", "must be positive");
    require(max_outcome_probability > 0.0 && max_outcome_probability < 1.0,
            "max_outcome_probability", "must lie in (0, 1)");
    require(max_retries >= 1, "max_retries", "must be at least 1");
    require(!leagues.empty(), "leagues", "at least one league is required");
    require(!agencies.empty(), "agencies", "at least one agency is required");

    std::set<std::string> ids;
    for (const auto& l : leagues) {
        require(!l.id.empty() && l.id.find(',') == std::string::npos, "leagues.id",
                "must be non-empty and comma-free");
        require(ids.insert("L:" + l.id).second, "leagues.id", "duplicate id " + l.id);
        require(l.n_outcomes >= 2, "leagues.n_outcomes", "must be at least 2 (" + l.id + ")");
        require(l.events_per_week >= 0, "leagues.events_per_week", "must be non-negative");
        require(l.n_outcomes * max_outcome_probability > 1.0, "max_outcome_probability",
                "too small for an " + std::to_string(l.n_outcomes) + "-way market");
    }
    bool any_treated = false;
    bool any_control = false;
    for (const auto& a : agencies) {
        require(!a.id.empty() && a.id.find(',') == std::string::npos, "agencies.id",
                "must be non-empty and comma-free");
        require(ids.insert("A:" + a.id).second, "agencies.id", "duplicate id " + a.id);
        require(a.first_week >= 0 && a.first_week < n_weeks, "agencies.first_week",
                "out of range for " + a.id);
        require(a.ramp_weeks >= 0, "agencies.ramp_weeks", "must be non-negative");
        (a.treated ? any_treated : any_control) = true;
        const bool shrouds = a.policy != odds::PolicyKind::no_shroud;
        require(shrouds == a.policy_start_week.has_value(), "agencies.policy_start_week",
                "present iff the policy is not 'none' (" + a.id + ")");
        if (a.policy_start_week) {
            require(*a.policy_start_week >= reform_week, "agencies.policy_start_week",
                    "must not precede the reform (" + a.id + ")");
        }
        if (!a.treated) {
            require(!shrouds, "agencies.policy", "untreated agency " + a.id + " cannot shroud");
            require(a.effect_shrouded == 0.0 && a.effect_unshrouded == 0.0, "agencies.effect",
                    "untreated agency " + a.id + " must have zero injected effects");
        }
    }
    require(any_treated, "agencies", "need at least one treated agency");
    require(any_control, "agencies", "need at least one control agency");
}

bool policy_active(const AgencySpec& agency, int week, const DGPConfig& config) {
    return agency.treated && agency.policy != odds::PolicyKind::no_shroud &&
           agency.policy_start_week && week >= *agency.policy_start_week &&
           week >= config.reform_week;
}

double injected_effect(const AgencySpec& agency, int week, const DGPConfig& config) {
    if (!config.inject_effects || !agency.treated || week < config.reform_week) return 0.0;
    if (policy_active(agency, week, config)) {
        if (agency.ramp_weeks <= 0) return agency.effect_shrouded;
        const double done = static_cast<double>(week - *agency.policy_start_week + 1) /
                            static_cast<double>(agency.ramp_weeks);
        return agency.effect_shrouded * std::min(1.0, done);
    }
    return agency.effect_unshrouded;
}

namespace {

struct Event {
    std::uint64_t id;
    std::size_t league;
    std::vector<double> probs;
};

std::vector<double> draw_probabilities(const DGPConfig& config, std::uint64_t event_id, int n) {
    CounterRng rng(config.master_seed, {kEventStream, event_id});
    for (int attempt = 0; attempt < 10000; ++attempt) {
        auto p = rng.dirichlet(static_cast<std::size_t>(n), config.dirichlet_concentration);
        if (*std::max_element(p.begin(), p.end()) <= config.max_outcome_probability) return p;
    }
    throw NumericalError("could not draw outcome probabilities for event " + std::to_string(event_id));
}

}  // namespace

std::vector<PanelRow> generate_panel(const DGPConfig& config) {
    config.validate();

    // Event calendar: week-major, then league, then slot.
    std::vector<std::vector<Event>> weeks(static_cast<std::size_t>(config.n_weeks));
    std::uint64_t next_id = 0;
    for (int w = 0; w < config.n_weeks; ++w) {
        for (std::size_t l = 0; l < config.leagues.size(); ++l) {
            const auto& league = config.leagues[l];
            for (int j = 0; j < league.events_per_week; ++j) {
                const std::uint64_t id = next_id++;
                weeks[static_cast<std::size_t>(w)].push_back(
                    {id, l, draw_probabilities(config, id, league.n_outcomes)});
            }
        }
    }

    const int n_quarters = config.quarter_of(config.n_weeks - 1) + 1;
    const double t = config.tax_rate;

    std::vector<PanelRow> rows;
    rows.reserve(config.agencies.size() * static_cast<std::size_t>(next_id));
    for (std::size_t a = 0; a < config.agencies.size(); ++a) {
        const auto& agency = config.agencies[a];
        std::vector<double> shocks(static_cast<std::size_t>(n_quarters));
        for (int q = 0; q < n_quarters; ++q) {
            CounterRng rng(config.master_seed, {kShockStream, a, static_cast<std::uint64_t>(q)});
            shocks[static_cast<std::size_t>(q)] = config.cluster_shock_sd * rng.normal();
        }
        for (int w = agency.first_week; w < config.n_weeks; ++w) {
            const int quarter = config.quarter_of(w);
            const bool active = policy_active(agency, w, config);
            const odds::ShroudingPolicy policy{active ? agency.policy : odds::PolicyKind::no_shroud,
                                               active ? t : 0.0};
            const double mean = config.price_level + agency.agency_effect + config.time_effect(w) +
                                injected_effect(agency, w, config) +
                                shocks[static_cast<std::size_t>(quarter)];
            for (const auto& ev : weeks[static_cast<std::size_t>(w)]) {
                const auto& league = config.leagues[ev.league];
                CounterRng rng(config.master_seed, {kNoiseStream, a, ev.id});
                const double pmax = *std::max_element(ev.probs.begin(), ev.probs.end());
                const double base = mean + league.league_effect;
                double target = 0.0;
                bool feasible = false;
                for (int attempt = 0; attempt < config.max_retries && !feasible; ++attempt) {
                    target = base + config.noise_sd * rng.normal();
                    // Effective odds 1/(theta pi_s) must exceed 1: pi_max < 1 - p.
                    feasible = target > 0.0 && target < 1.0 && pmax < 1.0 - target;
                }
                if (!feasible) {
                    throw NumericalError("infeasible price target for agency " + agency.id +
                                         ", event " + std::to_string(ev.id) + " after " +
                                         std::to_string(config.max_retries) + " retries");
                }
                const double theta = odds::markup_from_price(target);
                const double posted_theta = odds::posted_markup_for_effective(theta, policy);
                std::vector<double> posted_odds;
                posted_odds.reserve(ev.probs.size());
                for (double pi : ev.probs) posted_odds.push_back(1.0 / (posted_theta * pi));
                const auto d = odds::decompose(odds::EventQuote(std::move(posted_odds)), policy);

                PanelRow row;
                row.agency_id = agency.id;
                row.event_id = ev.id;
                row.week = w;
                row.quarter = quarter;
                row.league_id = league.id;
                row.sport = league.sport;
                row.n_outcomes = league.n_outcomes;
                row.treated = agency.treated;
                row.post = w >= config.reform_week;
                row.policy = agency.policy;
                row.policy_active = active;
                row.posted_price = d.posted_price;
                row.effective_price = d.effective_price;
                if (config.retain_probabilities) row.true_probabilities = ev.probs;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::vector<PanelRow> trim_quantiles(const std::vector<PanelRow>& rows, double lower, double upper) {
    if (!(lower >= 0.0 && lower < upper && upper <= 1.0)) {
        throw ValidationError("trim quantiles need 0 <= lower < upper <= 1");
    }
    if (rows.empty()) throw ValidationError("trim_quantiles: empty group (no rows)");
    std::map<int, std::vector<double>> by_quarter;
    for (const auto& r : rows) by_quarter[r.quarter].push_back(r.effective_price);
    std::map<int, std::pair<double, double>> bounds;
    for (auto& [q, prices] : by_quarter) {
        std::sort(prices.begin(), prices.end());
        const auto n = static_cast<double>(prices.size());
        // Nearest rank: the ceil(p n)-th order statistic, at least the first.
        const auto rank = [&](double p) {
            const auto r = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
            return prices[std::clamp<std::size_t>(r, 1, prices.size()) - 1];
        };
        bounds[q] = {rank(lower), rank(upper)};
    }
    std::vector<PanelRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const auto [lo, hi] = bounds[r.quarter];
        if (r.effective_price >= lo && r.effective_price <= hi) out.push_back(r);
    }
    return out;
}

DGPConfig DGPConfig::calibrated() {
    DGPConfig c;
    // Table means of the 16 competitions, expressed around their
    // observation-weighted average (0.07015).
    constexpr double kCentre = 0.0701454545;
    struct L {
        const char* id;
        const char* name;
        Sport sport;
        int outcomes;
        double mean;
        int per_week;
    };
    const L leagues[] = {
        {"DE-BL1", "Bundesliga", Sport::soccer, 3, 0.0621, 3},
        {"DE-BL2", "2. Bundesliga", Sport::soccer, 3, 0.0792, 3},
        {"DE-BL3", "3. Liga", Sport::soccer, 3, 0.0887, 3},
        {"EN-PL", "Premier League", Sport::soccer, 3, 0.0576, 4},
        {"EN-CH", "Championship", Sport::soccer, 3, 0.0740, 5},
        {"ES-PD", "Primera Division", Sport::soccer, 3, 0.0616, 4},
        {"ES-SD", "Segunda Division", Sport::soccer, 3, 0.0847, 4},
        {"IT-SA", "Serie A", Sport::soccer, 3, 0.0627, 4},
        {"IT-SB", "Serie B", Sport::soccer, 3, 0.0848, 4},
        {"FR-L1", "Ligue 1", Sport::soccer, 3, 0.0659, 4},
        {"FR-L2", "Ligue 2", Sport::soccer, 3, 0.0819, 4},
        {"DE-HBL", "Handball-Bundesliga", Sport::handball, 3, 0.0932, 2},
        {"DE-BBL", "Basketball Bundesliga", Sport::basketball, 2, 0.0752, 2},
        {"US-NBA", "NBA", Sport::basketball, 2, 0.0615, 10},
        {"US-NFL", "NFL", Sport::american_football, 2, 0.0585, 2},
        {"US-NHL", "NHL", Sport::hockey, 2, 0.0630, 8},
    };
    for (const auto& l : leagues) {
        c.leagues.push_back({l.id, l.name, l.sport, l.outcomes, l.mean - kCentre, l.per_week});
    }

    // Treated agencies with their shrouding policy and the adoption lag in
    // weeks after the reform.
    struct T {
        const char* id;
        odds::PolicyKind policy;
        int lag;
        int first_week;
    };
    using odds::PolicyKind;
    const T treated[] = {
        {"T00", PolicyKind::deduct_from_winnings, 17, 0},
        {"T01", PolicyKind::deduct_from_wager, 4, 0},
        {"T02", PolicyKind::no_shroud, -1, 325},  // enters the market 12 quarters after the reform
        {"T03", PolicyKind::deduct_from_wager, 186, 0},
        {"T04", PolicyKind::deduct_from_winnings, 35, 0},
        {"T05", PolicyKind::deduct_from_winnings, 4, 0},
        {"T06", PolicyKind::deduct_from_winnings, 0, 0},
        {"T07", PolicyKind::deduct_from_winnings, 13, 0},
        {"T08", PolicyKind::no_shroud, -1, 0},
        {"T09", PolicyKind::deduct_from_winnings, 22, 0},
    };
    constexpr double kAgencySd = 0.006;
    std::uint64_t idx = 0;
    const auto agency_effect = [&] {
        CounterRng rng(0x5eedULL, {idx++});
        return kAgencySd * rng.normal();
    };
    for (const auto& t : treated) {
        AgencySpec a;
        a.id = t.id;
        a.treated = true;
        a.policy = t.policy;
        a.first_week = t.first_week;
        a.agency_effect = agency_effect();
        if (t.policy == PolicyKind::no_shroud) {
            a.effect_unshrouded = 0.008;
        } else {
            a.policy_start_week = c.reform_week + t.lag;
            a.effect_unshrouded = 0.004;
            a.effect_shrouded = 0.046;
        }
        c.agencies.push_back(std::move(a));
    }
    for (int k = 0; k < 20; ++k) {
        AgencySpec a;
        a.id = (k < 10 ? "C0" : "C") + std::to_string(k);
        a.agency_effect = agency_effect();
        c.agencies.push_back(std::move(a));
    }
    return c;
}

}  // namespace shroudlab::datagen
