// SPDX-License-Identifier: Apache-2.0
#include "shroudlab/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "shroudlab/error.hpp"

namespace shroudlab::io {

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line
        long line = 1;
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        for (std::size_t i = 0; i + 1 < upto; ++i) {
            if (text[i] == '\n') ++line;
        }
        throw SchemaError(std::string("invalid JSON: ") + e.what(), line);
    }
}

Json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_json(ss.str());
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ValidationError("write to '" + path + "' failed");
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

// Strict object reader: every key must be consumed.
class Reader {
public:
    Reader(const Json& j, std::string context) : j_(j), ctx_(std::move(context)) {
        if (!j_.is_object()) throw ValidationError(ctx_ + ": expected a JSON object");
    }

    template <class T>
    bool get(const char* key, T& out) {
        const auto it = j_.find(key);
        if (it == j_.end()) return false;
        used_.insert(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!it->is_number()) throw ValidationError("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ValidationError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw ValidationError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) throw ValidationError("");
            }
            out = it->template get<T>();
        } catch (const std::exception&) {
            throw ValidationError(ctx_ + "." + key + ": wrong type");
        }
        return true;
    }

    const Json* child(const char* key) {
        const auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        used_.insert(key);
        return &*it;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.count(k)) throw ValidationError(ctx_ + ": unknown key '" + k + "'");
        }
    }

    const std::string& context() const { return ctx_; }

private:
    const Json& j_;
    std::string ctx_;
    std::set<std::string> used_;
};

Json number_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
    if (std::isnan(v)) return Json(nullptr);
    return Json(v);
}

}  // namespace

Json to_json(const datagen::DGPConfig& c) {
    Json j;
    j["master_seed"] = c.master_seed;
    j["tax_rate"] = c.tax_rate;
    j["n_weeks"] = c.n_weeks;
    j["reform_week"] = c.reform_week;
    j["weeks_per_quarter"] = c.weeks_per_quarter;
    j["price_level"] = c.price_level;
    j["noise_sd"] = c.noise_sd;
    j["cluster_shock_sd"] = c.cluster_shock_sd;
    j["dirichlet_concentration"] = c.dirichlet_concentration;
    j["max_outcome_probability"] = c.max_outcome_probability;
    j["max_retries"] = c.max_retries;
    j["inject_effects"] = c.inject_effects;
    j["retain_probabilities"] = c.retain_probabilities;
    j["time_effects"] = {{"trend_per_week", c.time_effects.trend_per_week},
                         {"seasonal_amplitude", c.time_effects.seasonal_amplitude},
                         {"seasonal_period_weeks", c.time_effects.seasonal_period_weeks}};
    Json leagues = Json::array();
    for (const auto& l : c.leagues) {
        leagues.push_back({{"id", l.id},
                           {"name", l.name},
                           {"sport", std::string(datagen::to_string(l.sport))},
                           {"n_outcomes", l.n_outcomes},
                           {"league_effect", l.league_effect},
                           {"events_per_week", l.events_per_week}});
    }
    j["leagues"] = std::move(leagues);
    Json agencies = Json::array();
    for (const auto& a : c.agencies) {
        Json aj{{"id", a.id},
                {"treated", a.treated},
                {"policy", std::string(odds::to_string(a.policy))},
                {"policy_start_week", a.policy_start_week ? Json(*a.policy_start_week) : Json(nullptr)},
                {"agency_effect", a.agency_effect},
                {"effect_unshrouded", a.effect_unshrouded},
                {"effect_shrouded", a.effect_shrouded},
                {"ramp_weeks", a.ramp_weeks},
                {"first_week", a.first_week}};
        agencies.push_back(std::move(aj));
    }
    j["agencies"] = std::move(agencies);
    return j;
}

datagen::DGPConfig dgp_config_from_json(const Json& j) {
    auto c = datagen::DGPConfig::calibrated();
    Reader r(j, "config");
    if (const Json* seed = r.child("master_seed")) {
        if (seed->is_number_unsigned() || (seed->is_number_integer() && seed->get<long long>() >= 0)) {
            c.master_seed = seed->get<std::uint64_t>();
        } else if (seed->is_string()) {
            const auto s = seed->get<std::string>();
            std::size_t pos = 0;
            try {
                c.master_seed = std::stoull(s, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != s.size() || s.empty() || s[0] == '-') {
                throw ValidationError("config.master_seed: not an unsigned 64-bit integer");
            }
        } else {
            throw ValidationError("config.master_seed: not an unsigned 64-bit integer");
        }
    }
    r.get("tax_rate", c.tax_rate);
    r.get("n_weeks", c.n_weeks);
    r.get("reform_week", c.reform_week);
    r.get("weeks_per_quarter", c.weeks_per_quarter);
    r.get("price_level", c.price_level);
    r.get("noise_sd", c.noise_sd);
    r.get("cluster_shock_sd", c.cluster_shock_sd);
    r.get("dirichlet_concentration", c.dirichlet_concentration);
    r.get("max_outcome_probability", c.max_outcome_probability);
    r.get("max_retries", c.max_retries);
    r.get("inject_effects", c.inject_effects);
    r.get("retain_probabilities", c.retain_probabilities);
    if (const Json* te = r.child("time_effects")) {
        Reader t(*te, "config.time_effects");
        t.get("trend_per_week", c.time_effects.trend_per_week);
        t.get("seasonal_amplitude", c.time_effects.seasonal_amplitude);
        t.get("seasonal_period_weeks", c.time_effects.seasonal_period_weeks);
        t.finish();
    }
    if (const Json* ls = r.child("leagues")) {
        if (!ls->is_array()) throw ValidationError("config.leagues: expected an array");
        c.leagues.clear();
        for (std::size_t i = 0; i < ls->size(); ++i) {
            Reader lr((*ls)[i], "config.leagues[" + std::to_string(i) + "]");
            datagen::LeagueSpec l;
            if (!lr.get("id", l.id)) throw ValidationError(lr.context() + ": missing 'id'");
            l.name = l.id;
            lr.get("name", l.name);
            std::string sport = "soccer";
            lr.get("sport", sport);
            l.sport = datagen::parse_sport(sport);
            lr.get("n_outcomes", l.n_outcomes);
            lr.get("league_effect", l.league_effect);
            lr.get("events_per_week", l.events_per_week);
            lr.finish();
            c.leagues.push_back(std::move(l));
        }
    }
    if (const Json* as = r.child("agencies")) {
        if (!as->is_array()) throw ValidationError("config.agencies: expected an array");
        c.agencies.clear();
        for (std::size_t i = 0; i < as->size(); ++i) {
            Reader ar((*as)[i], "config.agencies[" + std::to_string(i) + "]");
            datagen::AgencySpec a;
            if (!ar.get("id", a.id)) throw ValidationError(ar.context() + ": missing 'id'");
            ar.get("treated", a.treated);
            std::string policy = "none";
            ar.get("policy", policy);
            a.policy = odds::parse_policy_kind(policy);
            if (const Json* start = ar.child("policy_start_week"); start && !start->is_null()) {
                if (!start->is_number_integer()) {
                    throw ValidationError(ar.context() + ".policy_start_week: wrong type");
                }
                a.policy_start_week = start->get<int>();
            }
            ar.get("agency_effect", a.agency_effect);
            ar.get("effect_unshrouded", a.effect_unshrouded);
            ar.get("effect_shrouded", a.effect_shrouded);
            ar.get("ramp_weeks", a.ramp_weeks);
            ar.get("first_week", a.first_week);
            ar.finish();
            c.agencies.push_back(std::move(a));
        }
    }
    r.finish();
    c.validate();
    return c;
}

Json to_json(const game::MarketConfig& c) {
    Json j;
    j["n_firms"] = c.n_firms;
    j["marginal_cost"] = c.marginal_cost;
    j["tax"] = c.tax;
    j["attentive_share"] = c.attentive_share;
    j["attention"] = c.attention;
    j["shroud_disutility"] = c.shroud_disutility;
    j["prefs"] = {{"a", c.prefs.a}, {"b", c.prefs.b}, {"c_lin", c.prefs.c_lin}};
    j["gamma"] = c.gamma;
    j["income"] = c.income;
    j["transfer"] = c.transfer ? Json(*c.transfer) : Json(nullptr);
    return j;
}

game::MarketConfig market_config_from_json(const Json& j, game::MarketConfig c) {
    Reader r(j, "market");
    r.get("n_firms", c.n_firms);
    r.get("marginal_cost", c.marginal_cost);
    r.get("tax", c.tax);
    r.get("attentive_share", c.attentive_share);
    r.get("attention", c.attention);
    r.get("shroud_disutility", c.shroud_disutility);
    r.get("gamma", c.gamma);
    r.get("income", c.income);
    if (const Json* p = r.child("prefs")) {
        Reader pr(*p, "market.prefs");
        pr.get("a", c.prefs.a);
        pr.get("b", c.prefs.b);
        pr.get("c_lin", c.prefs.c_lin);
        pr.finish();
    }
    if (const Json* t = r.child("transfer")) {
        if (t->is_null()) {
            c.transfer.reset();
        } else if (t->is_number()) {
            c.transfer = t->get<double>();
        } else {
            throw ValidationError("market.transfer: wrong type");
        }
    }
    r.finish();
    c.validate();
    return c;
}

game::StrategyProfile profile_from_json(const Json& j, const game::MarketConfig& config) {
    const double m = config.marginal_cost;
    const double t = config.tax;
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "segmented") return game::segmented_equilibrium(config);
        if (name == "equilibrium") return game::equilibrium_profile(config);
        if (name == "all_unshroud") return game::StrategyProfile::uniform(config.n_firms, {m + t, false});
        if (name == "all_shroud") return game::StrategyProfile::uniform(config.n_firms, {m, true});
        throw ValidationError("unknown profile '" + name +
                              "' (expected segmented, equilibrium, all_unshroud, all_shroud or an array)");
    }
    if (!j.is_array()) throw ValidationError("profile: expected a name or an array of strategies");
    game::StrategyProfile p;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Reader r(j[i], "profile[" + std::to_string(i) + "]");
        game::FirmStrategy s;
        if (!r.get("posted_price", s.posted_price)) throw ValidationError(r.context() + ": missing 'posted_price'");
        r.get("shroud", s.shroud);
        r.finish();
        if (!(s.posted_price >= 0.0)) throw ValidationError(r.context() + ".posted_price: must be non-negative");
        p.strategies.push_back(s);
    }
    if (static_cast<int>(p.size()) != config.n_firms) {
        throw ValidationError("profile has " + std::to_string(p.size()) + " strategies for n_firms = " +
                              std::to_string(config.n_firms));
    }
    return p;
}

Json to_json(const game::StrategyProfile& p, double tax) {
    Json a = Json::array();
    for (const auto& s : p.strategies) {
        a.push_back({{"posted_price", s.posted_price},
                     {"shroud", s.shroud},
                     {"consumer_price", s.consumer_price(tax)}});
    }
    return a;
}

theory::Elasticity elasticity_from_json(const Json& j) {
    if (j.is_number()) return theory::Elasticity(j.get<double>());
    if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity")) {
        return theory::Elasticity::infinite();
    }
    throw ValidationError("elasticity must be a number or \"inf\"");
}

Json to_json(const game::EquilibriumReport& r, double tax) {
    Json j;
    j["verified"] = r.verified;
    j["profile"] = to_json(r.profile, tax);
    j["profits"] = r.profits;
    j["x_attentive"] = r.x_attentive;
    j["x_inattentive"] = r.x_inattentive;
    j["welfare"] = r.welfare;
    j["max_gain"] = r.max_gain;
    j["tolerance"] = r.tolerance;
    j["deviations_checked"] = r.deviations_checked;
    j["grid"] = {{"lo", r.grid.lo}, {"hi", r.grid.hi}, {"step", r.grid.step}};
    if (r.best_deviation) {
        const auto& d = *r.best_deviation;
        j["best_deviation"] = {{"firm", d.firm},
                               {"posted_price", d.strategy.posted_price},
                               {"shroud", d.strategy.shroud},
                               {"profit", d.profit},
                               {"gain", d.gain}};
    } else {
        j["best_deviation"] = nullptr;
    }
    return j;
}

Json to_json(const game::TaxSweep& s) {
    Json j;
    j["t_second_best"] = s.t_second_best;
    j["welfare_max"] = s.welfare_max;
    j["t_attentive"] = s.t_attentive;
    j["t_inattentive"] = number_or_inf(s.t_inattentive);
    Json curve = Json::array();
    for (const auto& [t, w] : s.curve) curve.push_back(Json::array({t, w}));
    j["welfare_curve"] = std::move(curve);
    return j;
}

Json to_json(const theory::CompetitivePassThrough& r) {
    return {{"rho", r.rho}, {"demand_supply_ratio", number_or_inf(r.demand_supply_ratio)}};
}

Json to_json(const theory::MonopolyPassThrough& r) {
    return {{"rho", r.rho},
            {"supply_term", r.supply_term},
            {"curvature_term", r.curvature_term},
            {"denominator", r.denominator},
            {"over_shifting", r.over_shifting}};
}

Json to_json(const theory::SalienceIncidence& r) {
    return {{"dq_dt", r.dq_dt},
            {"dp_dt", r.dp_dt},
            {"price_ratio", r.price_ratio},
            {"denominator", number_or_inf(r.denominator)}};
}

Json to_json(const theory::SinTax& r) {
    return {{"t_star", number_or_inf(r.t_star)},
            {"pigouvian", r.pigouvian},
            {"dollar_multiplier", number_or_inf(r.dollar_multiplier)}};
}

Json to_json(const econ::RegressionFit& fit, const econ::RegressionSpec& spec) {
    Json j;
    j["design"] = std::string(econ::to_string(fit.design));
    j["response"] = fit.response;
    j["filter"] = std::string(econ::to_string(spec.filter));
    j["fixed_effects"] = fit.fixed_effects;
    j["cluster"] = fit.cluster;
    j["tax_rate"] = fit.tax_rate;
    const bool event = fit.design == econ::Design::event_study || fit.design == econ::Design::event_study_het;
    if (event) {
        j["baseline"] = fit.baseline;
        j["k_min"] = spec.k_min;
        j["k_max"] = spec.k_max;
    }
    j["n_obs"] = fit.n_obs;
    j["n_clusters"] = fit.n_clusters;
    j["n_regressors"] = fit.n_regressors;
    j["n_absorbed"] = fit.n_absorbed;
    j["r2"] = fit.r2;
    j["r2_within"] = fit.r2_within;
    j["constant"] = fit.constant;
    j["absorption"] = {{"iterations", fit.absorption.iterations},
                       {"final_change", fit.absorption.final_change},
                       {"converged", fit.absorption.converged},
                       {"tol", spec.absorb.tol},
                       {"max_iter", spec.absorb.max_iter}};
    if (const auto* t = fit.find("T")) {
        j["passthrough"] = econ::passthrough_from_beta(t->estimate, fit.tax_rate);
        j["passthrough_se"] = t->std_error / fit.tax_rate;
    }
    Json coefs = Json::array();
    for (const auto& c : fit.coefficients) {
        Json cj{{"name", c.name},
                {"estimate", c.estimate},
                {"std_error", c.std_error},
                {"t_stat", c.t_stat},
                {"passthrough", econ::passthrough_from_beta(c.estimate, fit.tax_rate)}};
        if (c.event_time) cj["event_time"] = *c.event_time;
        cj["interacted"] = c.interacted;
        coefs.push_back(std::move(cj));
    }
    j["coefficients"] = std::move(coefs);
    if (event) {
        Json path = Json::array();
        for (const auto& p : econ::event_paths(fit)) {
            Json pj{{"k", p.k}, {"shrouded", p.shrouded}, {"shrouded_se", p.shrouded_se}};
            if (p.unshrouded) {
                pj["unshrouded"] = *p.unshrouded;
                pj["unshrouded_se"] = *p.unshrouded_se;
            }
            path.push_back(std::move(pj));
        }
        j["event_path"] = std::move(path);
    }
    Json cov = Json::array();
    for (Eigen::Index i = 0; i < fit.covariance.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < fit.covariance.cols(); ++k) row.push_back(fit.covariance(i, k));
        cov.push_back(std::move(row));
    }
    j["covariance"] = std::move(cov);
    j["dropped_rows"] = fit.dropped_rows;
    j["warnings"] = fit.warnings;
    return j;
}

}  // namespace shroudlab::io
