// SPDX-License-Identifier: Apache-2.0
#include "shroudlab/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shroudlab/error.hpp"
#include "shroudlab/theory.hpp"

namespace shroudlab::game {

namespace {

// Comparison prices closer than this are treated as tied.
constexpr double kTieTol = 1e-12;

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

std::vector<double> grid_points(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ValidationError("empty grid: need step > 0 and hi >= lo");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> pts;
    pts.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) pts.push_back(lo + static_cast<double>(i) * step);
    return pts;
}

}  // namespace

void MarketConfig::validate() const {
    require(n_firms >= 1, "n_firms must be at least 1");
    require(marginal_cost >= 0.0, "marginal_cost must be non-negative");
    require(tax >= 0.0, "tax must be non-negative");
    require(attentive_share >= 0.0 && attentive_share <= 1.0, "attentive_share must lie in [0, 1]");
    require(attention >= 0.0 && attention <= 1.0, "attention must lie in [0, 1]");
    require(shroud_disutility >= 0.0, "shroud_disutility must be non-negative");
    require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
    require(prefs.b > 0.0, "prefs.b must be positive");
    require(prefs.a - prefs.c_lin > marginal_cost,
            "prefs: a - c_lin must exceed marginal_cost for a positive first-best quantity");
    if (transfer) require(*transfer >= 0.0, "transfer must be non-negative");
    // Worst case: the largest quantity anyone demands at the highest consumer
    // price the deviation grid can produce.
    const double x_max = std::max(prefs.a, 0.0) / prefs.b;
    const double p_max = marginal_cost + 3.0 * std::max(tax, 0.05);
    require(income >= x_max * p_max,
            "income too small: budget could bind (need W >= " + std::to_string(x_max * p_max) + ")");
}

StrategyProfile StrategyProfile::uniform(int n_firms, FirmStrategy s) {
    return StrategyProfile{std::vector<FirmStrategy>(static_cast<std::size_t>(n_firms), s)};
}

double demand_quantity(double perceived_price, const Preferences& prefs, double gamma) {
    return std::max(0.0, (prefs.a - gamma * prefs.c_lin - perceived_price) / prefs.b);
}

double perceived_price(const FirmStrategy& strategy, bool attentive, const MarketConfig& config) {
    if (!strategy.shroud) return strategy.posted_price;
    if (attentive) return strategy.posted_price + config.tax + config.shroud_disutility;
    return strategy.posted_price + config.attention * config.tax;
}

DemandAllocation allocate_demand(const StrategyProfile& profile, const MarketConfig& config) {
    const std::size_t n = profile.size();
    require(n >= 1, "profile needs at least one firm");
    DemandAllocation out;
    out.firms.resize(n);

    const double lambda = config.attentive_share;

    // Attentive buyers go to the lowest comparison price.
    double best_att = std::numeric_limits<double>::infinity();
    for (const auto& s : profile.strategies) best_att = std::min(best_att, perceived_price(s, true, config));
    std::vector<std::size_t> att_set;
    for (std::size_t k = 0; k < n; ++k) {
        if (perceived_price(profile[k], true, config) <= best_att + kTieTol) att_set.push_back(k);
    }
    const double x_att = demand_quantity(best_att, config.prefs, config.gamma);
    for (std::size_t k : att_set) {
        out.firms[k].attentive_mass = lambda / static_cast<double>(att_set.size());
        out.firms[k].attentive_quantity = x_att;
    }
    out.x_attentive = x_att;

    // Inattentive buyers split equally among the lowest posted prices.
    double best_posted = std::numeric_limits<double>::infinity();
    for (const auto& s : profile.strategies) best_posted = std::min(best_posted, s.posted_price);
    std::vector<std::size_t> inatt_set;
    for (std::size_t k = 0; k < n; ++k) {
        if (profile[k].posted_price <= best_posted + kTieTol) inatt_set.push_back(k);
    }
    const double share = 1.0 / static_cast<double>(inatt_set.size());
    double x_inatt = 0.0;
    for (std::size_t k : inatt_set) {
        const double q = demand_quantity(perceived_price(profile[k], false, config), config.prefs,
                                         config.gamma);
        out.firms[k].inattentive_mass = (1.0 - lambda) * share;
        out.firms[k].inattentive_quantity = q;
        x_inatt += share * q;
    }
    out.x_inattentive = x_inatt;
    return out;
}

namespace {

double profit_of(const FirmStrategy& s, const FirmDemand& d, const MarketConfig& config) {
    return (s.consumer_price(config.tax) - config.tax - config.marginal_cost) * d.volume();
}

}  // namespace

double firm_profit(const StrategyProfile& profile, std::size_t firm, const MarketConfig& config) {
    if (firm >= profile.size()) {
        throw ValidationError("firm index " + std::to_string(firm) + " out of range");
    }
    const auto alloc = allocate_demand(profile, config);
    return profit_of(profile[firm], alloc.firms[firm], config);
}

std::vector<double> firm_profits(const StrategyProfile& profile, const MarketConfig& config) {
    const auto alloc = allocate_demand(profile, config);
    std::vector<double> out(profile.size());
    for (std::size_t k = 0; k < profile.size(); ++k) out[k] = profit_of(profile[k], alloc.firms[k], config);
    return out;
}

StrategyProfile segmented_equilibrium(const MarketConfig& config) {
    if (config.n_firms < 4) {
        throw ValidationError("segmented equilibrium requires N >= 4 firms (got N = " +
                              std::to_string(config.n_firms) + ")");
    }
    const int shrouding = config.n_firms / 2;
    StrategyProfile p;
    p.strategies.reserve(static_cast<std::size_t>(config.n_firms));
    for (int k = 0; k < config.n_firms; ++k) {
        if (k < shrouding) {
            p.strategies.push_back({config.marginal_cost, true});
        } else {
            p.strategies.push_back({config.marginal_cost + config.tax, false});
        }
    }
    return p;
}

StrategyProfile equilibrium_profile(const MarketConfig& config) {
    if (config.n_firms >= 4) return segmented_equilibrium(config);
    if (config.attentive_share == 1.0 || config.tax == 0.0) {
        return StrategyProfile::uniform(config.n_firms, {config.marginal_cost + config.tax, false});
    }
    if (config.attentive_share == 0.0) {
        return StrategyProfile::uniform(config.n_firms, {config.marginal_cost, true});
    }
    return segmented_equilibrium(config);  // throws with the N >= 4 message
}

PriceGrid PriceGrid::around(const MarketConfig& config) {
    const double w = config.tax > 0.0 ? config.tax : 0.05;
    return {config.marginal_cost - w, config.marginal_cost + 2.0 * w, w / 100.0};
}

std::vector<double> PriceGrid::points() const { return grid_points(lo, hi, step); }

EquilibriumReport verify_equilibrium(const StrategyProfile& profile, const MarketConfig& config,
                                     const PriceGrid& grid, double tolerance) {
    const auto prices = grid.points();
    EquilibriumReport rep;
    rep.profile = profile;
    rep.grid = grid;
    rep.tolerance = tolerance;
    rep.profits = firm_profits(profile, config);
    const auto alloc = allocate_demand(profile, config);
    rep.x_attentive = alloc.x_attentive;
    rep.x_inattentive = alloc.x_inattentive;
    rep.welfare = aggregate_welfare(profile, config);

    double best_gain = -std::numeric_limits<double>::infinity();
    StrategyProfile trial = profile;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        for (bool shroud : {false, true}) {
            for (double p : prices) {
                trial.strategies[k] = {p, shroud};
                const double dev = firm_profit(trial, k, config);
                const double gain = dev - rep.profits[k];
                ++rep.deviations_checked;
                if (gain > best_gain) {
                    best_gain = gain;
                    rep.best_deviation = Deviation{k, {p, shroud}, dev, gain};
                }
            }
        }
        trial.strategies[k] = profile.strategies[k];
    }
    rep.max_gain = std::max(0.0, best_gain);
    rep.verified = best_gain <= tolerance;
    return rep;
}

double first_best_quantity(const Preferences& prefs, double marginal_cost) {
    const double x = (prefs.a - prefs.c_lin - marginal_cost) / prefs.b;
    if (!(x > 0.0)) {
        throw ValidationError("choked market: first-best quantity is not positive");
    }
    return x;
}

double first_best_welfare(const MarketConfig& config) {
    const auto& pr = config.prefs;
    const double x = first_best_quantity(pr, config.marginal_cost);
    return pr.enjoyment(x) - pr.harm(x) - config.marginal_cost * x + config.income;
}

WelfareBreakdown welfare_breakdown(const StrategyProfile& profile, const MarketConfig& config) {
    WelfareBreakdown w;
    w.allocation = allocate_demand(profile, config);
    const auto& pr = config.prefs;

    double volume = 0.0;
    for (const auto& d : w.allocation.firms) volume += d.volume();
    w.tax_revenue = config.tax * volume;
    w.transfer = config.transfer.value_or(w.tax_revenue);
    w.government_surplus = w.tax_revenue - w.transfer;

    const double endowment = config.income + w.transfer;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        const auto& s = profile[k];
        const auto& d = w.allocation.firms[k];
        const double price = s.consumer_price(config.tax);
        const auto consume = [&](double mass, double x, double extra_cost) {
            if (mass <= 0.0) return;
            const double z = endowment - price * x;
            if (z < 0.0) throw ValidationError("budget violation: income W too small");
            w.consumer_utility += mass * (pr.enjoyment(x) - pr.harm(x) - extra_cost + z);
            w.expenditure += mass * price * x;
            w.composite += mass * z;
        };
        // s is borne only by attentive buyers who knowingly buy from a shrouding firm.
        consume(d.attentive_mass, d.attentive_quantity,
                s.shroud ? config.shroud_disutility * d.attentive_quantity : 0.0);
        consume(d.inattentive_mass, d.inattentive_quantity, 0.0);
        w.profits += profit_of(s, d, config);
    }
    // Consumers who buy nothing still hold their endowment.
    double served = 0.0;
    for (const auto& d : w.allocation.firms) served += d.attentive_mass + d.inattentive_mass;
    const double idle = std::max(0.0, 1.0 - served);
    w.consumer_utility += idle * endowment;
    w.composite += idle * endowment;

    w.total = w.consumer_utility + w.profits + w.government_surplus;
    return w;
}

double aggregate_welfare(const StrategyProfile& profile, const MarketConfig& config) {
    return welfare_breakdown(profile, config).total;
}

TaxGrid TaxGrid::around(const MarketConfig& config) {
    const double pigou = (1.0 - config.gamma) * config.prefs.c_lin;
    const double ref = pigou > 0.0 ? pigou : 0.05;
    const double hi = config.attention > 0.0 ? 2.0 * ref / config.attention : 2.0 * ref;
    return {0.0, hi, ref / 200.0};
}

std::vector<double> TaxGrid::points() const { return grid_points(lo, hi, step); }

TaxSweep second_best_tax_sweep(const MarketConfig& config, const TaxGrid& grid) {
    const auto taxes = grid.points();
    if (taxes.front() < 0.0) throw ValidationError("tax grid must be non-negative");
    TaxSweep out;
    const auto sin_tax = theory::optimal_sin_tax({config.gamma, 1.0, config.prefs.c_lin});
    out.t_attentive = sin_tax.pigouvian;
    out.t_inattentive = config.attention > 0.0 ? out.t_attentive / config.attention
                                               : std::numeric_limits<double>::infinity();
    if (out.t_attentive > 0.0 && grid.step > out.t_attentive / 200.0 + 1e-15) {
        throw ValidationError("tax grid step must not exceed t*/200 = " +
                              std::to_string(out.t_attentive / 200.0));
    }
    out.welfare_max = -std::numeric_limits<double>::infinity();
    out.curve.reserve(taxes.size());
    for (double t : taxes) {
        MarketConfig c = config;
        c.tax = t;
        c.validate();
        const double w = aggregate_welfare(equilibrium_profile(c), c);
        out.curve.emplace_back(t, w);
        // Strict comparison keeps the lowest maximiser on flat stretches.
        if (w > out.welfare_max) {
            out.welfare_max = w;
            out.t_second_best = t;
        }
    }
    return out;
}

}  // namespace shroudlab::game
