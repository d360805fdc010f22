// SPDX-License-Identifier: Apache-2.0
#include "shroudlab/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "shroudlab/datagen.hpp"
#include "shroudlab/econometrics.hpp"
#include "shroudlab/error.hpp"
#include "shroudlab/game.hpp"
#include "shroudlab/json_io.hpp"
#include "shroudlab/suite.hpp"
#include "shroudlab/theory.hpp"

namespace shroudlab::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;
using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ValidationError("cannot create directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

struct RunRecord {
    std::string subcommand;
    Json config;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> artifacts;
};

void write_manifest(const std::string& path, const RunRecord& run, double wall_seconds) {
    Json m;
    m["subcommand"] = run.subcommand;
    m["tool_version"] = SHROUDLAB_VERSION;
    m["config_hash"] = io::hex64(io::fnv1a(run.config.dump()));
    m["master_seed"] = run.seed ? Json(*run.seed) : Json(nullptr);
    Json arts = Json::array();
    for (const auto& a : run.artifacts) {
        const std::string bytes = read_file(a);
        arts.push_back({{"path", a}, {"fnv1a", io::hex64(io::fnv1a(bytes))}, {"bytes", bytes.size()}});
    }
    m["artifacts"] = std::move(arts);
    m["wall_time_seconds"] = wall_seconds;
    io::write_text(path, io::dump(m));
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool with_probabilities = false;
    std::optional<double> trim_lower;
    std::optional<double> trim_upper;
};

RunRecord do_simulate(const SimulateArgs& a) {
    auto cfg = a.config.empty() ? datagen::DGPConfig::calibrated() : io::dgp_config_from_json(io::load_json(a.config));
    if (a.seed) cfg.master_seed = *a.seed;
    cfg.validate();
    auto rows = datagen::generate_panel(cfg);
    if (a.trim_lower || a.trim_upper) {
        rows = datagen::trim_quantiles(rows, a.trim_lower.value_or(0.0), a.trim_upper.value_or(1.0));
    }
    datagen::write_panel(a.out, rows, a.with_probabilities);
    RunRecord r{"simulate", io::to_json(cfg), cfg.master_seed, {a.out}};
    r.config["with_probabilities"] = a.with_probabilities;
    if (a.trim_lower || a.trim_upper) {
        r.config["trim"] = {a.trim_lower.value_or(0.0), a.trim_upper.value_or(1.0)};
    }
    return r;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string panel;
    std::string design = "did";
    std::vector<std::string> fe;
    std::string cluster = "agency";
    int baseline = -1;
    int k_min = -13;
    int k_max = 25;
    std::string filter = "all";
    std::string response = "effective_price";
    double tax_rate = 0.05;
    double absorb_tol = 1e-8;
    int absorb_max_iter = 10000;
    std::string out;
    std::string coef_csv;
};

econ::RegressionSpec spec_from(const EstimateArgs& a) {
    econ::RegressionSpec s;
    s.design = econ::parse_design(a.design);
    if (!a.fe.empty()) {
        std::vector<econ::FeDim> dims;
        for (const auto& f : a.fe) {
            if (f == "none") continue;
            dims.push_back(econ::parse_fe(f));
        }
        s.fixed_effects = dims;
    }
    s.cluster = econ::parse_cluster(a.cluster);
    s.baseline = a.baseline;
    s.k_min = a.k_min;
    s.k_max = a.k_max;
    s.filter = econ::parse_filter(a.filter);
    s.response = a.response;
    s.tax_rate = a.tax_rate;
    s.absorb.tol = a.absorb_tol;
    s.absorb.max_iter = a.absorb_max_iter;
    return s;
}

Json spec_json(const econ::RegressionSpec& s) {
    Json fes = Json::array();
    for (auto d : s.effective_fixed_effects()) fes.push_back(std::string(econ::to_string(d)));
    return {{"design", std::string(econ::to_string(s.design))},
            {"response", s.response},
            {"fixed_effects", fes},
            {"cluster", std::string(econ::to_string(s.cluster))},
            {"baseline", s.baseline},
            {"k_min", s.k_min},
            {"k_max", s.k_max},
            {"filter", std::string(econ::to_string(s.filter))},
            {"tax_rate", s.tax_rate},
            {"absorb_tol", s.absorb.tol},
            {"absorb_max_iter", s.absorb.max_iter}};
}

std::string coefficients_csv(const Json& fit) {
    std::string out = "name,estimate,std_error,t_stat,passthrough,event_time,interacted\n";
    for (const auto& c : fit.at("coefficients")) {
        out += c.at("name").get<std::string>();
        for (const char* k : {"estimate", "std_error", "t_stat", "passthrough"}) {
            out += ',';
            out += fmt(c.at(k).get<double>());
        }
        out += ',';
        if (c.contains("event_time")) out += std::to_string(c.at("event_time").get<int>());
        out += c.value("interacted", false) ? ",1\n" : ",0\n";
    }
    return out;
}

RunRecord do_estimate_rows(const std::vector<datagen::PanelRow>& rows, const econ::RegressionSpec& spec,
                           const std::string& out, const std::string& coef_csv, const std::string& panel_path) {
    const auto fit = econ::estimate(rows, spec);
    const Json j = io::to_json(fit, spec);
    io::write_text(out, io::dump(j));
    RunRecord r{"estimate", spec_json(spec), std::nullopt, {out}};
    r.config["panel"] = panel_path;
    if (!coef_csv.empty()) {
        io::write_text(coef_csv, coefficients_csv(j));
        r.artifacts.push_back(coef_csv);
    }
    return r;
}

RunRecord do_estimate(const EstimateArgs& a) {
    const auto spec = spec_from(a);
    const auto rows = datagen::read_panel(a.panel);
    return do_estimate_rows(rows, spec, a.out, a.coef_csv, a.panel);
}

// ---------------------------------------------------------------------------
// theory

void elasticity_inputs(const Json& j, theory::ElasticityInputs& in, const std::string& ctx) {
    if (!j.is_object()) throw ValidationError(ctx + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        if (k == "eta_demand") {
            in.eta_demand = io::elasticity_from_json(v);
        } else if (k == "eta_supply") {
            in.eta_supply = io::elasticity_from_json(v);
        } else if (k == "eta_ms") {
            in.eta_ms = io::elasticity_from_json(v);
        } else if (k == "salience" || k == "consumer_price" || k == "producer_price") {
            if (!v.is_number()) throw ValidationError(ctx + "." + k + ": wrong type");
            (k == "salience" ? in.salience : k == "consumer_price" ? in.consumer_price : in.producer_price) =
                v.get<double>();
        } else {
            throw ValidationError(ctx + ": unknown key '" + k + "'");
        }
    }
}

RunRecord do_theory(const std::string& config, const std::string& out) {
    const Json cfg = io::load_json(config);
    if (!cfg.is_object() || cfg.empty()) {
        throw ValidationError("theory config: expected an object with at least one of passthrough_competitive, "
                              "passthrough_monopoly, incidence_salience, optimal_sin_tax");
    }
    Json result;
    for (const auto& [k, v] : cfg.items()) {
        if (k == "passthrough_competitive" || k == "passthrough_monopoly" || k == "incidence_salience") {
            theory::ElasticityInputs in;
            elasticity_inputs(v, in, k);
            Json r = k == "passthrough_competitive" ? io::to_json(theory::passthrough_competitive(in))
                     : k == "passthrough_monopoly"  ? io::to_json(theory::passthrough_monopoly(in))
                                                    : io::to_json(theory::incidence_salience(in));
            result[k] = {{"inputs", v}, {"result", r}};
        } else if (k == "optimal_sin_tax") {
            theory::SinTaxInputs in;
            if (!v.is_object()) throw ValidationError("optimal_sin_tax: expected an object");
            for (const auto& [f, x] : v.items()) {
                if (!x.is_number()) throw ValidationError("optimal_sin_tax." + f + ": wrong type");
                if (f == "gamma") {
                    in.gamma = x.get<double>();
                } else if (f == "attention") {
                    in.attention = x.get<double>();
                } else if (f == "marginal_harm") {
                    in.marginal_harm = x.get<double>();
                } else {
                    throw ValidationError("optimal_sin_tax: unknown key '" + f + "'");
                }
            }
            result[k] = {{"inputs", v}, {"result", io::to_json(theory::optimal_sin_tax(in))}};
        } else {
            throw ValidationError("theory config: unknown key '" + k + "'");
        }
    }
    io::write_text(out, io::dump(result));
    return RunRecord{"theory", cfg, std::nullopt, {out}};
}

// ---------------------------------------------------------------------------
// verify-equilibrium / tax-sweep

Json object_or_empty(const std::string& path) { return path.empty() ? Json::object() : io::load_json(path); }

RunRecord do_verify_equilibrium(const std::string& config, const std::string& out) {
    const Json cfg = object_or_empty(config);
    if (!cfg.is_object()) throw ValidationError("verify-equilibrium config: expected an object");
    game::MarketConfig market;
    Json profile_spec = "equilibrium";
    std::optional<game::PriceGrid> grid;
    double tol = 1e-9;
    for (const auto& [k, v] : cfg.items()) {
        if (k == "market") {
            market = io::market_config_from_json(v);
        } else if (k == "profile") {
            profile_spec = v;
        } else if (k == "grid") {
            if (!v.is_object()) throw ValidationError("grid: expected an object");
            game::PriceGrid g;
            try {
                g.lo = v.at("lo").get<double>();
                g.hi = v.at("hi").get<double>();
                g.step = v.at("step").get<double>();
            } catch (const nlohmann::json::exception&) {
                throw ValidationError("grid: needs numeric lo, hi and step");
            }
            grid = g;
        } else if (k == "tolerance") {
            if (!v.is_number()) throw ValidationError("tolerance: wrong type");
            tol = v.get<double>();
        } else {
            throw ValidationError("verify-equilibrium config: unknown key '" + k + "'");
        }
    }
    market.validate();
    const auto profile = io::profile_from_json(profile_spec, market);
    const auto rep = game::verify_equilibrium(profile, market, grid.value_or(game::PriceGrid::around(market)), tol);
    Json j;
    j["market"] = io::to_json(market);
    j["report"] = io::to_json(rep, market.tax);
    io::write_text(out, io::dump(j));
    return RunRecord{"verify-equilibrium", cfg, std::nullopt, {out}};
}

RunRecord do_tax_sweep(const std::string& config, const std::string& out) {
    const Json cfg = object_or_empty(config);
    if (!cfg.is_object()) throw ValidationError("tax-sweep config: expected an object");
    game::MarketConfig market;
    std::optional<game::TaxGrid> grid;
    for (const auto& [k, v] : cfg.items()) {
        if (k == "market") {
            market = io::market_config_from_json(v);
        } else if (k == "grid") {
            game::TaxGrid g;
            try {
                g.lo = v.at("lo").get<double>();
                g.hi = v.at("hi").get<double>();
                g.step = v.at("step").get<double>();
            } catch (const nlohmann::json::exception&) {
                throw ValidationError("grid: needs numeric lo, hi and step");
            }
            grid = g;
        } else {
            throw ValidationError("tax-sweep config: unknown key '" + k + "'");
        }
    }
    market.validate();
    const auto sweep = game::second_best_tax_sweep(market, grid.value_or(game::TaxGrid::around(market)));
    Json j;
    j["market"] = io::to_json(market);
    j["sweep"] = io::to_json(sweep);
    io::write_text(out, io::dump(j));
    return RunRecord{"tax-sweep", cfg, std::nullopt, {out}};
}

// ---------------------------------------------------------------------------
// verify-theory

RunRecord do_verify_theory(const std::string& config, const std::string& out, bool& all_passed) {
    const Json cfg = object_or_empty(config);
    const auto suite_cfg = suite::suite_config_from_json(cfg);
    const auto rep = suite::run_theory_suite(suite_cfg);
    all_passed = rep.all_passed();
    io::write_text(out, io::dump(rep.to_json()));
    return RunRecord{"verify-theory", cfg, std::nullopt, {out}};
}

// ---------------------------------------------------------------------------
// report

struct Target {
    std::string label;  // empty: any fit
    std::string coefficient;
    double rho = 0.0;
};

Target parse_target(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("target '" + text + "' must look like [FIT:]COEFFICIENT=RHO");
    }
    Target t;
    std::string lhs = text.substr(0, eq);
    const auto colon = lhs.find(':');
    if (colon != std::string::npos) {
        t.label = lhs.substr(0, colon);
        lhs = lhs.substr(colon + 1);
    }
    t.coefficient = lhs;
    const std::string rhs = text.substr(eq + 1);
    const auto* end = rhs.data() + rhs.size();
    const auto res = std::from_chars(rhs.data(), end, t.rho);
    if (res.ec != std::errc{} || res.ptr != end || rhs.empty()) {
        throw ValidationError("target '" + text + "': cannot parse the value");
    }
    return t;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

RunRecord do_report(const std::vector<std::string>& fits, const std::string& out_dir,
                    const std::vector<std::string>& target_texts, double tolerance) {
    if (fits.empty()) throw ValidationError("report needs at least one fit file");
    if (!(tolerance >= 0.0)) throw ValidationError("tolerance must be non-negative");
    std::vector<Target> targets;
    for (const auto& t : target_texts) targets.push_back(parse_target(t));
    ensure_dir(out_dir);

    struct Loaded {
        std::string label;
        Json fit;
    };
    std::vector<Loaded> loaded;
    std::set<std::string> labels;
    for (const auto& path : fits) {
        Json j = io::load_json(path);
        if (!j.is_object() || !j.contains("coefficients") || !j.contains("design")) {
            throw ValidationError("'" + path + "' is not a fit file (missing coefficients or design)");
        }
        std::string label = fs::path(path).stem().string();
        const std::string base = label;
        for (int i = 2; labels.count(label); ++i) label = base + "_" + std::to_string(i);
        labels.insert(label);
        loaded.push_back({label, std::move(j)});
    }

    RunRecord r{"report", Json::object(), std::nullopt, {}};
    r.config["fits"] = fits;
    r.config["targets"] = target_texts;
    r.config["tolerance"] = tolerance;

    for (const auto& l : loaded) {
        const std::string path = join(out_dir, l.label + "_coefficients.csv");
        io::write_text(path, coefficients_csv(l.fit));
        r.artifacts.push_back(path);
    }

    // Event paths side by side, one column group per fit.
    std::map<int, std::map<std::string, std::string>> wide;
    std::vector<std::string> columns;
    for (const auto& l : loaded) {
        if (!l.fit.contains("event_path")) continue;
        bool has_un = false;
        for (const auto& p : l.fit.at("event_path")) has_un = has_un || p.contains("unshrouded");
        columns.push_back(l.label + "_shrouded");
        columns.push_back(l.label + "_shrouded_se");
        if (has_un) {
            columns.push_back(l.label + "_unshrouded");
            columns.push_back(l.label + "_unshrouded_se");
        }
        for (const auto& p : l.fit.at("event_path")) {
            auto& row = wide[p.at("k").get<int>()];
            row[l.label + "_shrouded"] = fmt(p.at("shrouded").get<double>());
            row[l.label + "_shrouded_se"] = fmt(p.at("shrouded_se").get<double>());
            if (p.contains("unshrouded")) {
                row[l.label + "_unshrouded"] = fmt(p.at("unshrouded").get<double>());
                row[l.label + "_unshrouded_se"] = fmt(p.at("unshrouded_se").get<double>());
            }
        }
    }
    if (!columns.empty()) {
        std::string csv = "k";
        for (const auto& c : columns) csv += "," + c;
        csv += '\n';
        for (const auto& [k, row] : wide) {
            csv += std::to_string(k);
            for (const auto& c : columns) {
                csv += ',';
                if (const auto it = row.find(c); it != row.end()) csv += it->second;
            }
            csv += '\n';
        }
        const std::string path = join(out_dir, "event_paths.csv");
        io::write_text(path, csv);
        r.artifacts.push_back(path);
    }

    std::string txt;
    txt += pad("fit", 24) + pad("design", 18) + pad("coefficient", 16) + pad("estimate", 12) + pad("std_error", 12) +
           pad("rho", 10) + pad("target", 10) + "status\n";
    std::size_t n_pass = 0;
    std::size_t n_fail = 0;
    for (const auto& l : loaded) {
        const std::string design = l.fit.at("design").get<std::string>();
        std::size_t event_coefs = 0;
        for (const auto& c : l.fit.at("coefficients")) {
            const std::string name = c.at("name").get<std::string>();
            if (c.contains("event_time")) {
                ++event_coefs;
                continue;
            }
            const double rho = c.at("passthrough").get<double>();
            std::optional<double> target;
            for (const auto& t : targets) {
                if (t.coefficient == name && (t.label.empty() || t.label == l.label)) target = t.rho;
            }
            std::string status = "-";
            if (target) {
                const bool ok = std::abs(rho - *target) <= tolerance + 1e-12;
                status = ok ? "PASS" : "FAIL";
                (ok ? n_pass : n_fail) += 1;
            }
            txt += pad(l.label, 24) + pad(design, 18) + pad(name, 16) +
                   pad(fixed(c.at("estimate").get<double>(), 5), 12) +
                   pad(fixed(c.at("std_error").get<double>(), 5), 12) + pad(fixed(rho, 3), 10) +
                   pad(target ? fixed(*target, 3) : "-", 10) + status + "\n";
        }
        if (event_coefs > 0) {
            txt += pad(l.label, 24) + pad(design, 18) + pad("event path", 16) + std::to_string(event_coefs) +
                   " coefficients (see event_paths.csv)\n";
        }
    }
    txt += "\nN, clusters and R2:\n";
    for (const auto& l : loaded) {
        txt += "  " + pad(l.label, 22) + "N=" + std::to_string(l.fit.value("n_obs", 0)) +
               "  G=" + std::to_string(l.fit.value("n_clusters", 0)) + "  R2=" + fixed(l.fit.value("r2", 0.0), 4) +
               "  within R2=" + fixed(l.fit.value("r2_within", 0.0), 4) + "\n";
    }
    txt += "\ntargets: " + std::to_string(n_pass) + " PASS, " + std::to_string(n_fail) + " FAIL (tolerance " +
           fixed(tolerance, 3) + " in rho)\n";
    const std::string summary = join(out_dir, "summary.txt");
    io::write_text(summary, txt);
    r.artifacts.push_back(summary);
    return r;
}

// ---------------------------------------------------------------------------
// error reporting

int fail(std::ostream& err, const char* kind, const std::string& message, int code) {
    Json e{{"error", kind}, {"message", message}, {"exit_code", code}};
    err << e.dump() << '\n';
    return code;
}

std::string default_manifest(const std::string& out) { return out + ".manifest.json"; }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Betting-tax shrouding toolkit: odds algebra, pass-through theory, the shrouding game, "
                 "panel simulation and difference-in-differences estimation."};
    app.name("shroudlab");
    app.set_version_flag("--version", SHROUDLAB_VERSION);
    app.require_subcommand(1);

    std::string manifest;
    const auto add_manifest = [&](CLI::App* sub) {
        sub->add_option("--manifest", manifest, "Manifest path (default: <out>.manifest.json)");
    };

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Generate a synthetic betting-price panel (CSV)");
    s_sim->add_option("--config", sim.config, "DGP config JSON (default: built-in calibration)")->check(CLI::ExistingFile);
    s_sim->add_option("--seed", sim.seed, "Master seed (u64), overrides the config");
    s_sim->add_option("--out", sim.out, "Output CSV")->required();
    s_sim->add_flag("--with-probabilities", sim.with_probabilities, "Append the true outcome probabilities");
    s_sim->add_option("--trim-lower", sim.trim_lower, "Per-quarter lower price quantile to keep");
    s_sim->add_option("--trim-upper", sim.trim_upper, "Per-quarter upper price quantile to keep");
    add_manifest(s_sim);

    EstimateArgs est;
    auto* s_est = app.add_subcommand("estimate", "Fit a DID or event-study design on a panel CSV");
    s_est->add_option("--panel", est.panel, "Panel CSV")->required();
    s_est->add_option("--design", est.design, "did | event-study | did-het | event-study-het");
    s_est->add_option("--fe", est.fe, "Fixed effects: agency,week,quarter,league,league_agency or none")
        ->delimiter(',');
    s_est->add_option("--cluster", est.cluster, "agency | league | week | quarter | event");
    s_est->add_option("--baseline", est.baseline, "Omitted event period");
    s_est->add_option("--k-min", est.k_min, "First event period");
    s_est->add_option("--k-max", est.k_max, "Last event period");
    s_est->add_option("--filter", est.filter, "all | soccer_only | excl_cross");
    s_est->add_option("--response", est.response, "effective_price | posted_price");
    s_est->add_option("--tax-rate", est.tax_rate, "Tax rate for pass-through conversion");
    s_est->add_option("--absorb-tol", est.absorb_tol, "Absorption tolerance");
    s_est->add_option("--absorb-max-iter", est.absorb_max_iter, "Absorption sweep limit");
    s_est->add_option("--out", est.out, "Fit JSON")->required();
    s_est->add_option("--coef-csv", est.coef_csv, "Optional tidy coefficient CSV");
    add_manifest(s_est);

    std::string cfg_path;
    std::string out_path;
    auto* s_theory = app.add_subcommand("theory", "Evaluate pass-through and sin-tax formulas");
    s_theory->add_option("--config", cfg_path, "Parameter JSON")->required()->check(CLI::ExistingFile);
    s_theory->add_option("--out", out_path, "Result JSON")->required();
    add_manifest(s_theory);

    auto* s_veq = app.add_subcommand("verify-equilibrium", "Search unilateral deviations from a strategy profile");
    s_veq->add_option("--config", cfg_path, "Market/profile JSON")->check(CLI::ExistingFile);
    s_veq->add_option("--out", out_path, "Report JSON")->required();
    add_manifest(s_veq);

    auto* s_tax = app.add_subcommand("tax-sweep", "Grid-search the welfare-maximising tax");
    s_tax->add_option("--config", cfg_path, "Market/grid JSON")->check(CLI::ExistingFile);
    s_tax->add_option("--out", out_path, "Sweep JSON")->required();
    add_manifest(s_tax);

    auto* s_vt = app.add_subcommand("verify-theory", "Run the equilibrium and formula property checks");
    s_vt->add_option("--config", cfg_path, "Suite JSON (default grids when omitted)")->check(CLI::ExistingFile);
    s_vt->add_option("--out", out_path, "Report JSON")->required();
    add_manifest(s_vt);

    std::vector<std::string> fits;
    std::vector<std::string> targets;
    double tolerance = 0.06;
    auto* s_rep = app.add_subcommand("report", "Tidy coefficient CSVs and a summary table from fit files");
    s_rep->add_option("--fits", fits, "Fit JSON files")->required()->check(CLI::ExistingFile);
    s_rep->add_option("--out", out_path, "Output directory")->required();
    s_rep->add_option("--target", targets, "Pass-through target [FIT:]COEFFICIENT=RHO (repeatable)");
    s_rep->add_option("--tolerance", tolerance, "Allowed |rho - target|");
    add_manifest(s_rep);

    std::optional<std::uint64_t> pipe_seed;
    auto* s_pipe = app.add_subcommand("pipeline", "simulate, estimate all designs, verify-theory and report");
    s_pipe->add_option("--config", cfg_path, "DGP config JSON")->check(CLI::ExistingFile);
    s_pipe->add_option("--seed", pipe_seed, "Master seed (u64)");
    s_pipe->add_option("--out", out_path, "Output directory")->required();
    add_manifest(s_pipe);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::CallForVersion&) {
            out << SHROUDLAB_VERSION << '\n';
            return 0;
        } catch (const CLI::ParseError& e) {
            return fail(err, "usage_error", e.what(), 1);
        }

        const auto t0 = Clock::now();
        RunRecord record;
        std::string manifest_path;
        int code = 0;
        if (*s_sim) {
            record = do_simulate(sim);
            manifest_path = manifest.empty() ? default_manifest(sim.out) : manifest;
        } else if (*s_est) {
            record = do_estimate(est);
            manifest_path = manifest.empty() ? default_manifest(est.out) : manifest;
        } else if (*s_theory) {
            record = do_theory(cfg_path, out_path);
        } else if (*s_veq) {
            record = do_verify_equilibrium(cfg_path, out_path);
        } else if (*s_tax) {
            record = do_tax_sweep(cfg_path, out_path);
        } else if (*s_vt) {
            bool ok = true;
            record = do_verify_theory(cfg_path, out_path, ok);
            if (!ok) out << "verify-theory: at least one property failed, see " << out_path << '\n';
        } else if (*s_rep) {
            record = do_report(fits, out_path, targets, tolerance);
            manifest_path = manifest.empty() ? join(out_path, "manifest.json") : manifest;
        } else if (*s_pipe) {
            ensure_dir(out_path);
            SimulateArgs sa;
            sa.config = cfg_path;
            sa.seed = pipe_seed;
            sa.out = join(out_path, "panel.csv");
            const RunRecord simr = do_simulate(sa);
            record = RunRecord{"pipeline", Json::object(), simr.seed, simr.artifacts};
            record.config["simulate"] = simr.config;
            const auto rows = datagen::read_panel(sa.out);
            std::vector<std::string> fit_paths;
            for (const char* design : {"did", "did_het", "event_study", "event_study_het"}) {
                econ::RegressionSpec spec;
                spec.design = econ::parse_design(design);
                const std::string fit_path = join(out_path, std::string("fit_") + design + ".json");
                const auto er = do_estimate_rows(rows, spec, fit_path, "", sa.out);
                record.config[std::string("estimate_") + design] = er.config;
                record.artifacts.insert(record.artifacts.end(), er.artifacts.begin(), er.artifacts.end());
                fit_paths.push_back(fit_path);
            }
            bool ok = true;
            const auto vt = do_verify_theory("", join(out_path, "theory.json"), ok);
            record.artifacts.insert(record.artifacts.end(), vt.artifacts.begin(), vt.artifacts.end());
            const std::vector<std::string> pipe_targets = {"fit_did:T=0.76", "fit_did_het:T=0.92",
                                                           "fit_did_het:T_x_noShroud=-0.82"};
            const auto rr = do_report(fit_paths, join(out_path, "report"), pipe_targets, 0.06);
            record.config["report"] = rr.config;
            record.artifacts.insert(record.artifacts.end(), rr.artifacts.begin(), rr.artifacts.end());
            manifest_path = manifest.empty() ? join(out_path, "manifest.json") : manifest;
        }
        if (manifest_path.empty()) manifest_path = manifest.empty() ? default_manifest(out_path) : manifest;
        const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
        write_manifest(manifest_path, record, wall);
        return code;
    } catch (const SchemaError& e) {
        return fail(err, "schema_error", e.what(), 1);
    } catch (const ValidationError& e) {
        return fail(err, "validation_error", e.what(), 1);
    } catch (const NumericalError& e) {
        return fail(err, "numerical_error", e.what(), 2);
    } catch (const std::exception& e) {
        return fail(err, "runtime_error", e.what(), 2);
    }
}

}  // namespace shroudlab::cli
