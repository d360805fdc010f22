// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace shroudlab::game {

/// Quadratic enjoyment v(x) = a x - (b/2) x^2 and linear harm c(x) = c_lin x.
struct Preferences {
    double a = 10.0;
    double b = 1.0;
    double c_lin = 2.0;

    double enjoyment(double x) const noexcept { return a * x - 0.5 * b * x * x; }
    double harm(double x) const noexcept { return c_lin * x; }
};

struct MarketConfig {
    int n_firms = 4;
    double marginal_cost = 1.0;
    double tax = 0.05;
    double attentive_share = 0.5;    // lambda
    double attention = 0.5;          // share of a shrouded surcharge inattentive buyers perceive
    double shroud_disutility = 0.01; // s
    Preferences prefs;
    double gamma = 0.5;
    double income = 1000.0;
    /// Lump-sum transfer. Unset means the tax revenue is recycled in full.
    std::optional<double> transfer;

    void validate() const;
};

struct FirmStrategy {
    double posted_price = 0.0;
    bool shroud = false;

    double surcharge(double tax) const noexcept { return shroud ? tax : 0.0; }
    double consumer_price(double tax) const noexcept { return posted_price + surcharge(tax); }

    friend bool operator==(const FirmStrategy&, const FirmStrategy&) = default;
};

struct StrategyProfile {
    std::vector<FirmStrategy> strategies;

    std::size_t size() const noexcept { return strategies.size(); }
    const FirmStrategy& operator[](std::size_t k) const { return strategies.at(k); }

    static StrategyProfile uniform(int n_firms, FirmStrategy s);
};

/// Consumers of one type served by one firm. Quantities are per consumer.
struct FirmDemand {
    double attentive_mass = 0.0;
    double attentive_quantity = 0.0;
    double inattentive_mass = 0.0;
    double inattentive_quantity = 0.0;

    double volume() const noexcept {
        return attentive_mass * attentive_quantity + inattentive_mass * inattentive_quantity;
    }
};

struct DemandAllocation {
    std::vector<FirmDemand> firms;
    double x_attentive = 0.0;    // average per attentive consumer
    double x_inattentive = 0.0;  // average per inattentive consumer
};

/// Solves v'(x) - gamma c'(x) = price, clamped at zero.
double demand_quantity(double perceived_price, const Preferences& prefs, double gamma);

/// Attentive buyers compare p^s + tau (+ s when shrouding); inattentive
/// buyers see p^s + attention * tau.
double perceived_price(const FirmStrategy& strategy, bool attentive, const MarketConfig& config);

DemandAllocation allocate_demand(const StrategyProfile& profile, const MarketConfig& config);

double firm_profit(const StrategyProfile& profile, std::size_t firm, const MarketConfig& config);
std::vector<double> firm_profits(const StrategyProfile& profile, const MarketConfig& config);

/// floor(N/2) firms shroud at p^s = m, the rest post m + t unshrouded.
/// Requires N >= 4.
StrategyProfile segmented_equilibrium(const MarketConfig& config);

/// The equilibrium the sweep evaluates: all-unshroud at m + t when every
/// consumer is attentive, all-shroud at m when none is, and the segmented
/// profile otherwise.
StrategyProfile equilibrium_profile(const MarketConfig& config);

struct PriceGrid {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    /// [m - w, m + 2w] with step w/100, w = t (or 0.05 when t = 0).
    static PriceGrid around(const MarketConfig& config);
    std::vector<double> points() const;
};

struct Deviation {
    std::size_t firm = 0;
    FirmStrategy strategy;
    double profit = 0.0;
    double gain = 0.0;
};

struct EquilibriumReport {
    StrategyProfile profile;
    std::vector<double> profits;
    double x_attentive = 0.0;
    double x_inattentive = 0.0;
    double welfare = 0.0;
    std::optional<Deviation> best_deviation;
    double max_gain = 0.0;
    double tolerance = 0.0;
    PriceGrid grid;
    std::size_t deviations_checked = 0;
    bool verified = false;
};

/// Exhaustive unilateral-deviation search over {shroud, no-shroud} x grid.
EquilibriumReport verify_equilibrium(const StrategyProfile& profile, const MarketConfig& config,
                                     const PriceGrid& grid, double tolerance = 1e-9);

/// x* solving v'(x) - c'(x) = m. Throws ValidationError for a choked market.
double first_best_quantity(const Preferences& prefs, double marginal_cost);

/// v(x*) - c(x*) - m x* + W.
double first_best_welfare(const MarketConfig& config);

struct WelfareBreakdown {
    double consumer_utility = 0.0;  // sum of v - c - s-cost + z over consumers
    double profits = 0.0;
    double tax_revenue = 0.0;
    double transfer = 0.0;
    double government_surplus = 0.0;  // revenue - transfer
    double expenditure = 0.0;
    double composite = 0.0;  // aggregate z
    double total = 0.0;
    DemandAllocation allocation;
};

WelfareBreakdown welfare_breakdown(const StrategyProfile& profile, const MarketConfig& config);
double aggregate_welfare(const StrategyProfile& profile, const MarketConfig& config);

struct TaxGrid {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    /// [0, 2 t*_theta] with step t*/200 (t* the full-attention Pigouvian tax).
    static TaxGrid around(const MarketConfig& config);
    std::vector<double> points() const;
};

struct TaxSweep {
    double t_second_best = 0.0;
    double welfare_max = 0.0;
    double t_attentive = 0.0;    // (1 - gamma) c_x(x*)
    double t_inattentive = 0.0;  // (1 - gamma) c_x(x*) / attention, inf when attention = 0
    std::vector<std::pair<double, double>> curve;
};

TaxSweep second_best_tax_sweep(const MarketConfig& config, const TaxGrid& grid);

}  // namespace shroudlab::game
