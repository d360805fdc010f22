// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shroudlab::odds {

/// How a bookmaker collects the betting tax after odds are posted.
enum class PolicyKind {
    no_shroud,             // posted odds are paid out as-is
    deduct_from_winnings,  // payout scaled by (1 - t)
    deduct_from_wager,     // effective stake is wager / (1 + t)
};

std::string_view to_string(PolicyKind kind);

/// Parses "none", "winnings" or "wager". Throws ValidationError otherwise.
PolicyKind parse_policy_kind(std::string_view text);

struct ShroudingPolicy {
    PolicyKind kind = PolicyKind::no_shroud;
    double rate = 0.05;

    static ShroudingPolicy none() { return {PolicyKind::no_shroud, 0.0}; }
    static ShroudingPolicy winnings(double t = 0.05) { return {PolicyKind::deduct_from_winnings, t}; }
    static ShroudingPolicy wager(double t = 0.05) { return {PolicyKind::deduct_from_wager, t}; }

    /// Rate that actually enters the formulas; zero for no_shroud.
    double effective_rate() const noexcept { return kind == PolicyKind::no_shroud ? 0.0 : rate; }

    void validate() const;
};

/// Decimal odds for one event across mutually exclusive outcomes.
/// Construction enforces n >= 2 and every odd > 1.
class EventQuote {
public:
    EventQuote(std::string event_id, std::vector<double> odds);
    explicit EventQuote(std::vector<double> odds) : EventQuote(std::string{}, std::move(odds)) {}

    const std::string& event_id() const noexcept { return event_id_; }
    std::span<const double> odds() const noexcept { return odds_; }
    std::size_t outcomes() const noexcept { return odds_.size(); }
    double operator[](std::size_t s) const { return odds_.at(s); }

private:
    std::string event_id_;
    std::vector<double> odds_;
};

struct PriceDecomposition {
    double posted_price;
    double effective_price;
    double surcharge;
    double posted_markup;
    double effective_markup;
};

/// theta = sum_s 1/r_s.
double overround(const EventQuote& quote);

/// Consumer price of a one-unit bet, p = 1 - 1/theta.
double price_from_quote(const EventQuote& quote);

double price_from_markup(double markup);
double markup_from_price(double price);

/// pi_s = 1/(theta r_s).
double implied_probability(const EventQuote& quote, std::size_t s);
std::vector<double> implied_probabilities(const EventQuote& quote);

/// Effective odd for a single posted odd. Throws ValidationError when the
/// result is <= 1.
double effective_odd(double posted_odd, const ShroudingPolicy& policy);

EventQuote apply_policy(const EventQuote& posted, const ShroudingPolicy& policy);

/// Closed-form surcharge tau: 0, t/theta~, or t/((1+t) theta~).
double shrouded_surcharge(const EventQuote& posted, const ShroudingPolicy& policy);

/// Same closed form, expressed through the posted price only
/// (theta~ = 1/(1 - p~)).
double surcharge_from_posted_price(double posted_price, const ShroudingPolicy& policy);

/// Posted markup that yields the requested effective markup under a policy.
double posted_markup_for_effective(double effective_markup, const ShroudingPolicy& policy);

PriceDecomposition decompose(const EventQuote& posted, const ShroudingPolicy& policy);

/// Gross amount returned on a winning bet, wager x effective odd.
double net_payout(double posted_odd, double wager, const ShroudingPolicy& policy);

}  // namespace shroudlab::odds
