// SPDX-License-Identifier: Apache-2.0
#include "shroudlab/suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shroudlab/error.hpp"
#include "shroudlab/rng.hpp"
#include "shroudlab/theory.hpp"

namespace shroudlab::suite {

using game::MarketConfig;
using game::StrategyProfile;
using io::Json;

void SuiteConfig::validate() const {
    market.validate();
    const auto in_unit = [](const std::vector<double>& v, const char* name) {
        if (v.empty()) throw ValidationError(std::string(name) + ": grid must not be empty");
        for (double x : v) {
            if (!(x >= 0.0 && x <= 1.0)) throw ValidationError(std::string(name) + ": values must lie in [0, 1]");
        }
    };
    if (n_firms.empty()) throw ValidationError("n_firms: grid must not be empty");
    for (int n : n_firms) {
        if (n < 4) {
            throw ValidationError("n_firms: segmented equilibrium requires N >= 4 firms (got N = " +
                                  std::to_string(n) + ")");
        }
    }
    in_unit(attentive_share, "attentive_share");
    in_unit(attention, "attention");
    in_unit(loop_gamma, "loop_gamma");
    in_unit(loop_attention, "loop_attention");
    for (double a : loop_attention) {
        if (a == 0.0) throw ValidationError("loop_attention: zero attention makes corrective taxation ineffective");
    }
    if (shroud_disutility.empty()) throw ValidationError("shroud_disutility: grid must not be empty");
    for (double s : shroud_disutility) {
        if (!(s >= 0.0)) throw ValidationError("shroud_disutility: values must be non-negative");
    }
    if (formula_sweep_points < 1) throw ValidationError("formula_sweep_points must be positive");
    if (!(deviation_tolerance >= 0.0)) throw ValidationError("deviation_tolerance must be non-negative");
}

SuiteConfig suite_config_from_json(const Json& j) {
    SuiteConfig c;
    if (!j.is_object()) throw ValidationError("suite config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "market") {
                c.market = io::market_config_from_json(value);
            } else if (key == "n_firms") {
                c.n_firms = value.get<std::vector<int>>();
            } else if (key == "attentive_share") {
                c.attentive_share = value.get<std::vector<double>>();
            } else if (key == "attention") {
                c.attention = value.get<std::vector<double>>();
            } else if (key == "shroud_disutility") {
                c.shroud_disutility = value.get<std::vector<double>>();
            } else if (key == "loop_attention") {
                c.loop_attention = value.get<std::vector<double>>();
            } else if (key == "loop_gamma") {
                c.loop_gamma = value.get<std::vector<double>>();
            } else if (key == "formula_sweep_points") {
                c.formula_sweep_points = value.get<int>();
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "deviation_tolerance") {
                c.deviation_tolerance = value.get<double>();
            } else if (key == "profile") {
                c.profile = value;
            } else {
                throw ValidationError("suite config: unknown key '" + key + "'");
            }
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("suite config: '" + key + "' has the wrong type");
        }
    }
    c.validate();
    return c;
}

bool SuiteReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

Json SuiteReport::to_json() const {
    Json j;
    j["all_passed"] = all_passed();
    Json arr = Json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name}, {"passed", c.passed}, {"cases", c.cases}, {"witness", c.witness}});
    }
    j["checks"] = std::move(arr);
    if (supplied_profile) j["supplied_profile"] = *supplied_profile;
    return j;
}

namespace {

Json market_point(const MarketConfig& c) {
    return {{"n_firms", c.n_firms},
            {"attentive_share", c.attentive_share},
            {"attention", c.attention},
            {"shroud_disutility", c.shroud_disutility},
            {"tax", c.tax},
            {"gamma", c.gamma}};
}

template <class F>
void for_each_market(const SuiteConfig& cfg, F f) {
    for (int n : cfg.n_firms) {
        for (double lam : cfg.attentive_share) {
            for (double th : cfg.attention) {
                for (double s : cfg.shroud_disutility) {
                    MarketConfig c = cfg.market;
                    c.n_firms = n;
                    c.attentive_share = lam;
                    c.attention = th;
                    c.shroud_disutility = s;
                    f(c);
                }
            }
        }
    }
}

CheckResult check_segmented(const SuiteConfig& cfg) {
    CheckResult r{"segmented_equilibrium_verifies", true, 0, nullptr};
    double worst = -std::numeric_limits<double>::infinity();
    for_each_market(cfg, [&](const MarketConfig& c) {
        const auto rep = game::verify_equilibrium(game::segmented_equilibrium(c), c, game::PriceGrid::around(c),
                                                  cfg.deviation_tolerance);
        ++r.cases;
        double max_abs_profit = 0.0;
        for (double p : rep.profits) max_abs_profit = std::max(max_abs_profit, std::abs(p));
        const bool ok = rep.verified && max_abs_profit <= 1e-12;
        if (!ok) r.passed = false;
        if (rep.max_gain > worst || (!ok && r.witness.is_null())) {
            worst = rep.max_gain;
            r.witness = market_point(c);
            r.witness["max_gain"] = rep.max_gain;
            r.witness["max_abs_profit"] = max_abs_profit;
        }
    });
    return r;
}

CheckResult check_all_unshroud_rejected(const SuiteConfig& cfg) {
    CheckResult r{"all_unshroud_rejected", true, 0, nullptr};
    double weakest = std::numeric_limits<double>::infinity();
    for_each_market(cfg, [&](const MarketConfig& c) {
        if (!(c.attentive_share > 0.0 && c.attentive_share < 1.0 && c.attention < 1.0)) return;
        const auto p = StrategyProfile::uniform(c.n_firms, {c.marginal_cost + c.tax, false});
        const auto rep = game::verify_equilibrium(p, c, game::PriceGrid::around(c), cfg.deviation_tolerance);
        ++r.cases;
        const bool ok = !rep.verified && rep.best_deviation && rep.best_deviation->strategy.shroud &&
                        rep.best_deviation->gain > 0.0;
        if (!ok) r.passed = false;
        const double gain = rep.best_deviation ? rep.best_deviation->gain : 0.0;
        if (gain < weakest || !ok) {
            weakest = gain;
            r.witness = market_point(c);
            if (rep.best_deviation) {
                r.witness["deviation_posted_price"] = rep.best_deviation->strategy.posted_price;
                r.witness["deviation_shroud"] = rep.best_deviation->strategy.shroud;
            }
            r.witness["gain"] = gain;
        }
    });
    return r;
}

CheckResult check_all_shroud_rejected(const SuiteConfig& cfg) {
    CheckResult r{"all_shroud_rejected", true, 0, nullptr};
    double weakest = std::numeric_limits<double>::infinity();
    for_each_market(cfg, [&](const MarketConfig& c) {
        if (!(c.shroud_disutility > 0.0 && c.attentive_share > 0.0 && c.tax > 0.0)) return;
        const auto p = StrategyProfile::uniform(c.n_firms, {c.marginal_cost, true});
        const auto rep = game::verify_equilibrium(p, c, game::PriceGrid::around(c), cfg.deviation_tolerance);
        ++r.cases;
        const bool ok = !rep.verified && rep.best_deviation && !rep.best_deviation->strategy.shroud &&
                        rep.best_deviation->strategy.posted_price > c.marginal_cost &&
                        rep.best_deviation->gain > 0.0;
        if (!ok) r.passed = false;
        const double gain = rep.best_deviation ? rep.best_deviation->gain : 0.0;
        if (gain < weakest || !ok) {
            weakest = gain;
            r.witness = market_point(c);
            if (rep.best_deviation) {
                r.witness["deviation_posted_price"] = rep.best_deviation->strategy.posted_price;
                r.witness["deviation_shroud"] = rep.best_deviation->strategy.shroud;
            }
            r.witness["gain"] = gain;
        }
    });
    return r;
}

CheckResult check_boundaries(const SuiteConfig& cfg) {
    CheckResult r{"zero_profit_boundaries", true, 0, nullptr};
    double worst = -1.0;
    for_each_market(cfg, [&](MarketConfig c) {
        struct Case {
            const char* name;
            MarketConfig market;
            StrategyProfile profile;
        };
        MarketConfig no_tax = c;
        no_tax.tax = 0.0;
        MarketConfig attentive = c;
        attentive.attentive_share = 1.0;
        MarketConfig inattentive = c;
        inattentive.attentive_share = 0.0;
        const Case cases[] = {
            {"no_tax", no_tax, StrategyProfile::uniform(c.n_firms, {c.marginal_cost, false})},
            {"all_attentive", attentive, StrategyProfile::uniform(c.n_firms, {c.marginal_cost + c.tax, false})},
            {"all_inattentive", inattentive, StrategyProfile::uniform(c.n_firms, {c.marginal_cost, true})},
        };
        for (const auto& k : cases) {
            ++r.cases;
            const auto rep = game::verify_equilibrium(k.profile, k.market, game::PriceGrid::around(k.market),
                                                      cfg.deviation_tolerance);
            double max_abs = 0.0;
            for (double p : rep.profits) max_abs = std::max(max_abs, std::abs(p));
            const bool ok = max_abs <= 1e-12 && rep.verified;
            if (!ok) r.passed = false;
            if (max_abs > worst || (!ok && r.passed)) {
                worst = max_abs;
                r.witness = market_point(k.market);
                r.witness["case"] = k.name;
                r.witness["max_abs_profit"] = max_abs;
                r.witness["verified"] = rep.verified;
            }
        }
    });
    return r;
}

CheckResult check_first_best_loop(const SuiteConfig& cfg) {
    CheckResult r{"pigouvian_tax_implements_first_best", true, 0, nullptr};
    double worst_x = 0.0;
    double worst_w = 0.0;
    for (double th : cfg.loop_attention) {
        for (double g : cfg.loop_gamma) {
            for (double lam : {0.0, 1.0}) {
                MarketConfig c = cfg.market;
                c.attention = lam == 1.0 ? 1.0 : th;
                c.attentive_share = lam;
                c.gamma = g;
                c.tax = theory::optimal_sin_tax({g, c.attention, c.prefs.c_lin}).t_star;
                const auto profile = game::equilibrium_profile(c);
                const auto alloc = game::allocate_demand(profile, c);
                const double x = lam == 1.0 ? alloc.x_attentive : alloc.x_inattentive;
                const double x_star = game::first_best_quantity(c.prefs, c.marginal_cost);
                const double dx = std::abs(x - x_star);
                const double dw = std::abs(game::aggregate_welfare(profile, c) - game::first_best_welfare(c));
                ++r.cases;
                if (dx > 1e-12 || dw > 1e-9) r.passed = false;
                if (dx >= worst_x || dw >= worst_w) {
                    worst_x = std::max(worst_x, dx);
                    worst_w = std::max(worst_w, dw);
                    r.witness = market_point(c);
                    r.witness["quantity_gap"] = dx;
                    r.witness["welfare_gap"] = dw;
                }
            }
        }
    }
    return r;
}

CheckResult check_heterogeneous_gap(const SuiteConfig& cfg) {
    CheckResult r{"heterogeneous_attention_misses_first_best", true, 0, nullptr};
    double smallest = std::numeric_limits<double>::infinity();
    for (double g : cfg.loop_gamma) {
        if (g >= 1.0) continue;
        MarketConfig c = cfg.market;
        c.attentive_share = 0.5;
        c.attention = 0.0;
        c.gamma = g;
        c.tax = (1.0 - g) * c.prefs.c_lin;
        const double gap = game::first_best_welfare(c) - game::aggregate_welfare(game::equilibrium_profile(c), c);
        ++r.cases;
        if (!(gap > 1e-9)) r.passed = false;
        if (gap < smallest) {
            smallest = gap;
            r.witness = market_point(c);
            r.witness["welfare_gap"] = gap;
        }
    }
    return r;
}

CheckResult check_second_best(const SuiteConfig& cfg) {
    CheckResult r{"second_best_tax_is_interior", true, 0, nullptr};
    for (double g : cfg.loop_gamma) {
        if (g >= 1.0) continue;
        MarketConfig c = cfg.market;
        c.attentive_share = 0.5;
        c.attention = 0.5;
        c.gamma = g;
        const auto sweep = game::second_best_tax_sweep(c, game::TaxGrid::around(c));
        ++r.cases;
        const bool ok = sweep.t_attentive < sweep.t_second_best && sweep.t_second_best < sweep.t_inattentive;
        if (!ok) r.passed = false;
        if (!ok || r.witness.is_null()) {
            r.witness = market_point(c);
            r.witness["t_attentive"] = sweep.t_attentive;
            r.witness["t_second_best"] = sweep.t_second_best;
            r.witness["t_inattentive"] = sweep.t_inattentive;
        }
    }
    return r;
}

CheckResult check_overconsumption(const SuiteConfig& cfg) {
    CheckResult r{"overconsumption_gap", true, 0, nullptr};
    double worst = 0.0;
    for (double g : cfg.loop_gamma) {
        const auto& p = cfg.market.prefs;
        const double m = cfg.market.marginal_cost;
        const double gap = game::demand_quantity(m, p, g) - game::first_best_quantity(p, m);
        const double expected = (1.0 - g) * p.c_lin / p.b;
        const double err = std::abs(gap - expected);
        ++r.cases;
        if (err > 1e-12 || (g < 1.0 && !(gap > 0.0))) r.passed = false;
        if (err >= worst) {
            worst = err;
            r.witness = {{"gamma", g}, {"gap", gap}, {"expected", expected}};
        }
    }
    return r;
}

CheckResult check_budget(const SuiteConfig& cfg) {
    CheckResult r{"budget_identity", true, 0, nullptr};
    double worst = 0.0;
    for_each_market(cfg, [&](const MarketConfig& c) {
        const auto profile = game::segmented_equilibrium(c);
        const auto wb = game::welfare_breakdown(profile, c);
        const double lam = c.attentive_share;
        const double quantity = lam * wb.allocation.x_attentive + (1.0 - lam) * wb.allocation.x_inattentive;
        const double e1 = std::abs(wb.expenditure + wb.composite - (c.income + wb.transfer));
        const double e2 = std::abs(wb.transfer - c.tax * quantity);
        ++r.cases;
        if (e1 > 1e-9 || e2 > 1e-9) r.passed = false;
        if (std::max(e1, e2) >= worst) {
            worst = std::max(e1, e2);
            r.witness = market_point(c);
            r.witness["identity_error"] = e1;
            r.witness["revenue_error"] = e2;
        }
    });
    return r;
}

CheckResult check_salience(const SuiteConfig& cfg) {
    CheckResult r{"salience_incidence_limits", true, 0, nullptr};
    CounterRng rng(cfg.seed, {0x5a1});
    double worst = 0.0;
    for (int i = 0; i < cfg.formula_sweep_points; ++i) {
        theory::ElasticityInputs in;
        in.eta_demand = 0.1 + 9.9 * rng.uniform();
        in.eta_supply = 0.1 + 9.9 * rng.uniform();
        in.consumer_price = in.producer_price = 0.5 + rng.uniform();
        in.salience = 0.0;
        const double dp0 = theory::incidence_salience(in).dp_dt;
        in.salience = 1.0;
        const double dp1 = theory::incidence_salience(in).dp_dt;
        const double rho = theory::passthrough_competitive(in).rho;
        ++r.cases;
        const double err = std::abs(dp1 - rho);
        if (dp0 != 1.0 || err > 1e-12) r.passed = false;
        if (err >= worst || dp0 != 1.0) {
            worst = err;
            r.witness = {{"eta_demand", in.eta_demand.value()},
                         {"eta_supply", in.eta_supply.value()},
                         {"dp_dt_unsalient", dp0},
                         {"competitive_gap", err}};
        }
    }
    return r;
}

CheckResult check_monopoly(const SuiteConfig& cfg) {
    CheckResult r{"monopoly_over_shifting_iff_negative_curvature", true, 0, nullptr};
    CounterRng rng(cfg.seed, {0x3070});
    int evaluated = 0;
    int attempts = 0;
    while (evaluated < cfg.formula_sweep_points && attempts < 100 * cfg.formula_sweep_points) {
        ++attempts;
        theory::ElasticityInputs in;
        // Constant marginal cost, or unit-elastic demand with finite supply:
        // the cases where the supply term vanishes.
        if (evaluated % 2 == 0) {
            in.eta_demand = 1.0 + 4.0 * rng.uniform();
            in.eta_supply = theory::Elasticity::infinite();
        } else {
            in.eta_demand = 1.0;
            in.eta_supply = 0.1 + 9.9 * rng.uniform();
        }
        in.eta_ms = -10.0 + 20.0 * rng.uniform();
        theory::MonopolyPassThrough mp{};
        try {
            mp = theory::passthrough_monopoly(in);
        } catch (const NumericalError&) {
            continue;  // invalid denominator
        }
        ++evaluated;
        ++r.cases;
        const bool ok = mp.over_shifting == (in.eta_ms.value() < 0.0) && mp.over_shifting == (mp.rho > 1.0);
        if (!ok) {
            r.passed = false;
            r.witness = {{"eta_demand", in.eta_demand.value()},
                         {"eta_ms", in.eta_ms.value()},
                         {"rho", mp.rho}};
        }
    }
    if (evaluated < cfg.formula_sweep_points) r.passed = false;
    if (r.witness.is_null()) r.witness = {{"evaluated", evaluated}, {"attempts", attempts}};
    return r;
}

CheckResult check_dollar_principle(const SuiteConfig& cfg) {
    CheckResult r{"pigouvian_dollar_principle", true, 0, nullptr};
    double worst = 0.0;
    for (double th : cfg.loop_attention) {
        for (double g : cfg.loop_gamma) {
            const auto st = theory::optimal_sin_tax({g, th, cfg.market.prefs.c_lin});
            const double err = std::abs(st.t_star * th - (1.0 - g) * cfg.market.prefs.c_lin);
            ++r.cases;
            if (err > 1e-12) r.passed = false;
            if (err >= worst) {
                worst = err;
                r.witness = {{"attention", th}, {"gamma", g}, {"t_star", st.t_star}, {"error", err}};
            }
        }
    }
    return r;
}

}  // namespace

SuiteReport run_theory_suite(const SuiteConfig& config) {
    config.validate();
    SuiteReport rep;
    rep.checks.push_back(check_segmented(config));
    rep.checks.push_back(check_all_unshroud_rejected(config));
    rep.checks.push_back(check_all_shroud_rejected(config));
    rep.checks.push_back(check_boundaries(config));
    rep.checks.push_back(check_first_best_loop(config));
    rep.checks.push_back(check_heterogeneous_gap(config));
    rep.checks.push_back(check_second_best(config));
    rep.checks.push_back(check_overconsumption(config));
    rep.checks.push_back(check_budget(config));
    rep.checks.push_back(check_salience(config));
    rep.checks.push_back(check_monopoly(config));
    rep.checks.push_back(check_dollar_principle(config));
    if (config.profile) {
        const auto profile = io::profile_from_json(*config.profile, config.market);
        const auto eq = game::verify_equilibrium(profile, config.market, game::PriceGrid::around(config.market),
                                                 config.deviation_tolerance);
        rep.supplied_profile = io::to_json(eq, config.market.tax);
    }
    return rep;
}

}  // namespace shroudlab::suite
