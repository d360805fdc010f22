// SPDX-License-Identifier: Apache-2.0
#include "shroudlab/odds.hpp"

#include <cmath>

#include "shroudlab/error.hpp"

namespace shroudlab::odds {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::no_shroud: return "none";
        case PolicyKind::deduct_from_winnings: return "winnings";
        case PolicyKind::deduct_from_wager: return "wager";
    }
    return "none";
}

PolicyKind parse_policy_kind(std::string_view text) {
    if (text == "none") return PolicyKind::no_shroud;
    if (text == "winnings") return PolicyKind::deduct_from_winnings;
    if (text == "wager") return PolicyKind::deduct_from_wager;
    throw ValidationError("unknown shrouding policy '" + std::string(text) +
                          "' (expected none, winnings or wager)");
}

void ShroudingPolicy::validate() const {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ValidationError("policy rate must lie in [0, 1), got " + std::to_string(rate));
    }
}

EventQuote::EventQuote(std::string event_id, std::vector<double> odds)
    : event_id_(std::move(event_id)), odds_(std::move(odds)) {
    if (odds_.size() < 2) {
        throw ValidationError("quote needs at least two outcomes");
    }
    for (std::size_t s = 0; s < odds_.size(); ++s) {
        if (!(odds_[s] > 1.0) || !std::isfinite(odds_[s])) {
            throw ValidationError("invalid quote: decimal odd " + std::to_string(odds_[s]) +
                                  " at outcome " + std::to_string(s) + " must exceed 1");
        }
    }
}

double overround(const EventQuote& quote) {
    double theta = 0.0;
    for (double r : quote.odds()) theta += 1.0 / r;
    return theta;
}

double price_from_markup(double markup) { return 1.0 - 1.0 / markup; }

double markup_from_price(double price) {
    if (!(price < 1.0)) throw ValidationError("price must be below 1");
    return 1.0 / (1.0 - price);
}

double price_from_quote(const EventQuote& quote) { return price_from_markup(overround(quote)); }

double implied_probability(const EventQuote& quote, std::size_t s) {
    if (s >= quote.outcomes()) {
        throw ValidationError("outcome index " + std::to_string(s) + " out of range for " +
                              std::to_string(quote.outcomes()) + "-way quote");
    }
    return 1.0 / (overround(quote) * quote[s]);
}

std::vector<double> implied_probabilities(const EventQuote& quote) {
    const double theta = overround(quote);
    std::vector<double> out;
    out.reserve(quote.outcomes());
    for (double r : quote.odds()) out.push_back(1.0 / (theta * r));
    return out;
}

double effective_odd(double posted_odd, const ShroudingPolicy& policy) {
    policy.validate();
    double r = posted_odd;
    switch (policy.kind) {
        case PolicyKind::no_shroud: break;
        case PolicyKind::deduct_from_winnings: r = posted_odd * (1.0 - policy.rate); break;
        case PolicyKind::deduct_from_wager: r = posted_odd / (1.0 + policy.rate); break;
    }
    if (!(r > 1.0)) {
        throw ValidationError("degenerate quote: effective odd " + std::to_string(r) +
                              " <= 1 after " + std::string(to_string(policy.kind)) + " deduction");
    }
    return r;
}

EventQuote apply_policy(const EventQuote& posted, const ShroudingPolicy& policy) {
    if (policy.kind == PolicyKind::no_shroud) return posted;
    std::vector<double> effective;
    effective.reserve(posted.outcomes());
    for (double r : posted.odds()) effective.push_back(effective_odd(r, policy));
    return EventQuote(posted.event_id(), std::move(effective));
}

double posted_markup_for_effective(double effective_markup, const ShroudingPolicy& policy) {
    policy.validate();
    switch (policy.kind) {
        case PolicyKind::no_shroud: return effective_markup;
        case PolicyKind::deduct_from_winnings: return effective_markup * (1.0 - policy.rate);
        case PolicyKind::deduct_from_wager: return effective_markup / (1.0 + policy.rate);
    }
    return effective_markup;
}

namespace {

double surcharge_from_markup(double posted_markup, const ShroudingPolicy& policy) {
    switch (policy.kind) {
        case PolicyKind::no_shroud: return 0.0;
        case PolicyKind::deduct_from_winnings: return policy.rate / posted_markup;
        case PolicyKind::deduct_from_wager:
            return policy.rate / ((1.0 + policy.rate) * posted_markup);
    }
    return 0.0;
}

}  // namespace

double shrouded_surcharge(const EventQuote& posted, const ShroudingPolicy& policy) {
    policy.validate();
    // Surface degenerate effective odds the same way apply_policy does.
    for (double r : posted.odds()) (void)effective_odd(r, policy);
    return surcharge_from_markup(overround(posted), policy);
}

double surcharge_from_posted_price(double posted_price, const ShroudingPolicy& policy) {
    policy.validate();
    return surcharge_from_markup(markup_from_price(posted_price), policy);
}

PriceDecomposition decompose(const EventQuote& posted, const ShroudingPolicy& policy) {
    const EventQuote effective = apply_policy(posted, policy);
    PriceDecomposition d{};
    d.posted_markup = overround(posted);
    d.effective_markup = overround(effective);
    d.posted_price = price_from_markup(d.posted_markup);
    d.surcharge = surcharge_from_markup(d.posted_markup, policy);
    d.effective_price = price_from_markup(d.effective_markup);
    return d;
}

double net_payout(double posted_odd, double wager, const ShroudingPolicy& policy) {
    if (!(wager > 0.0)) throw ValidationError("wager must be positive");
    if (!(posted_odd > 1.0)) throw ValidationError("posted odd must exceed 1");
    return wager * effective_odd(posted_odd, policy);
}

}  // namespace shroudlab::odds
