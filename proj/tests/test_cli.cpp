// SPDX-License-Identifier: Apache-2.0
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "shroudlab/commands.hpp"
#include "shroudlab/json_io.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "shroudlab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    Result r;
    r.code = shroudlab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct ScratchDir {
    fs::path path;
    ScratchDir() : path(fs::temp_directory_path() / ("shroudlab_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

const fs::path& workdir() {
    static const ScratchDir dir;
    return dir.path;
}

fs::path small_config_file() {
    const auto p = workdir() / "small.json";
    if (!fs::exists(p)) spit(p, shroudlab::io::dump(shroudlab::io::to_json(oracle::small_config())));
    return p;
}

// Default-size panel, simulated once.
fs::path default_panel() {
    const auto p = workdir() / "default_panel.csv";
    if (!fs::exists(p)) {
        const auto r = run({"simulate", "--seed", "42", "--out", p.string()});
        REQUIRE(r.code == 0);
    }
    return p;
}

// Runs the installed binary; stderr is captured through a file.
Result run_binary(const std::string& args) {
    const auto err_path = workdir() / "stderr.txt";
    const std::string cmd = std::string(SHROUDLAB_CLI_PATH) + " " + args + " > /dev/null 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
}

}  // namespace

TEST_CASE("simulate writes the panel contract deterministically") {
    const auto a = workdir() / "a.csv";
    const auto b = workdir() / "b.csv";
    REQUIRE(run({"simulate", "--config", small_config_file().string(), "--out", a.string()}).code == 0);
    REQUIRE(run({"simulate", "--config", small_config_file().string(), "--out", b.string()}).code == 0);
    const auto text = slurp(a);
    CHECK(text == slurp(b));
    CHECK(text.substr(0, text.find('\n')) ==
          "agency_id,event_id,week,quarter,league_id,sport,n_outcomes,treated,post,policy,policy_active,"
          "posted_price,effective_price");

    const auto manifest = Json::parse(slurp(workdir() / "a.csv.manifest.json"));
    CHECK(manifest.at("subcommand") == "simulate");
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest.at("artifacts").size() == 1);

    REQUIRE(run({"simulate", "--config", small_config_file().string(), "--seed", "9", "--out", b.string()}).code == 0);
    CHECK(text != slurp(b));

    const auto trimmed = workdir() / "trimmed.csv";
    REQUIRE(run({"simulate", "--config", small_config_file().string(), "--trim-lower", "0.05", "--trim-upper",
                 "0.95", "--out", trimmed.string()})
                .code == 0);
    CHECK(slurp(trimmed).size() < text.size());
}

TEST_CASE("simulate rejects an invalid config by field name") {
    auto cfg = shroudlab::io::to_json(oracle::small_config());
    cfg["reform_week"] = 5000;
    const auto p = workdir() / "bad.json";
    spit(p, cfg.dump());
    const auto r = run({"simulate", "--config", p.string(), "--out", (workdir() / "x.csv").string()});
    CHECK(r.code == 1);
    const auto e = Json::parse(r.err);
    CHECK(e.at("error") == "validation_error");
    CHECK(e.at("message").get<std::string>().find("reform_week") != std::string::npos);

    spit(p, "{\"master_seed\": 1,\n \"noise_sd\": }");
    const auto s = run({"simulate", "--config", p.string(), "--out", (workdir() / "x.csv").string()});
    CHECK(s.code == 1);
    CHECK(Json::parse(s.err).at("error") == "schema_error");
    CHECK(Json::parse(s.err).at("message").get<std::string>().find("line 2") != std::string::npos);
}

TEST_CASE("estimate: DID fit JSON and pass-through") {
    const auto fit_path = workdir() / "did.json";
    const auto coef_path = workdir() / "did.csv";
    const auto r = run({"estimate", "--panel", default_panel().string(), "--design", "did", "--out",
                        fit_path.string(), "--coef-csv", coef_path.string()});
    REQUIRE(r.code == 0);
    const auto fit = Json::parse(slurp(fit_path));
    CHECK(fit.at("design") == "did");
    CHECK(fit.at("cluster") == "agency");
    CHECK(fit.at("n_clusters") == 30);
    const double beta = fit.at("coefficients")[0].at("estimate").get<double>();
    CHECK(fit.at("passthrough").get<double>() == doctest::Approx(beta / 0.05));
    CHECK(std::abs(fit.at("passthrough").get<double>() - 0.76) <= 0.06);
    CHECK(slurp(coef_path).rfind("name,", 0) == 0);
}

TEST_CASE("estimate: event study has 38 coefficients") {
    const auto fit_path = workdir() / "es.json";
    const auto r = run({"estimate", "--panel", default_panel().string(), "--design", "event-study", "--out",
                        fit_path.string()});
    REQUIRE(r.code == 0);
    const auto fit = Json::parse(slurp(fit_path));
    CHECK(fit.at("coefficients").size() == 38);
    CHECK(fit.at("baseline") == -1);
    CHECK(fit.at("event_path").size() == 39);
    CHECK_FALSE(fit.contains("passthrough"));
}

TEST_CASE("estimate: schema and usage errors") {
    const auto bad = workdir() / "nocol.csv";
    spit(bad, "agency_id,event_id,week\nA,1,0\n");
    const auto r = run({"estimate", "--panel", bad.string(), "--out", (workdir() / "o.json").string()});
    CHECK(r.code != 0);
    const auto e = Json::parse(r.err);
    CHECK(e.at("error") == "schema_error");
    CHECK(e.at("message").get<std::string>().find("line 1") != std::string::npos);

    const auto u = run({"estimate", "--panel", bad.string(), "--design", "triple", "--out",
                        (workdir() / "o.json").string()});
    CHECK(u.code == 1);
    CHECK(run({"estimate"}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("verify-theory") {
    const auto out = workdir() / "vt.json";
    REQUIRE(run({"verify-theory", "--out", out.string()}).code == 0);
    const auto rep = Json::parse(slurp(out));
    CHECK(rep.at("all_passed") == true);
    CHECK(rep.at("checks").size() == 12);

    // A supplied all-unshroud profile is reported with its deviation.
    const auto cfg = workdir() / "vt_cfg.json";
    spit(cfg, R"({"n_firms": [4], "attentive_share": [0.5], "attention": [0.5], "shroud_disutility": [0.01],
                 "profile": "all_unshroud"})");
    REQUIRE(run({"verify-theory", "--config", cfg.string(), "--out", out.string()}).code == 0);
    const auto sup = Json::parse(slurp(out));
    REQUIRE(sup.contains("supplied_profile"));
    CHECK(sup.at("supplied_profile").at("verified") == false);
    CHECK(sup.at("supplied_profile").at("best_deviation").at("shroud") == true);

    spit(cfg, R"({"n_firms": [3]})");
    const auto r = run({"verify-theory", "--config", cfg.string(), "--out", out.string()});
    CHECK(r.code == 1);
    CHECK(Json::parse(r.err).at("message").get<std::string>().find("N >= 4") != std::string::npos);
}

TEST_CASE("theory, verify-equilibrium and tax-sweep") {
    const auto cfg = workdir() / "th.json";
    const auto out = workdir() / "th_out.json";
    spit(cfg, R"({"passthrough_monopoly": {"eta_demand": 2, "eta_supply": "inf", "eta_ms": -2},
                 "optimal_sin_tax": {"gamma": 0.5, "attention": 0.5, "marginal_harm": 2}})");
    REQUIRE(run({"theory", "--config", cfg.string(), "--out", out.string()}).code == 0);
    const auto th = Json::parse(slurp(out));
    CHECK(th.at("passthrough_monopoly").at("result").at("rho").get<double>() == doctest::Approx(2.0));
    CHECK(th.at("optimal_sin_tax").at("result").at("t_star").get<double>() == doctest::Approx(2.0));

    spit(cfg, R"({"passthrough_monopoly": {"eta_demand": 2, "eta_supply": "inf", "eta_ms": -1}})");
    const auto sing = run({"theory", "--config", cfg.string(), "--out", out.string()});
    CHECK(sing.code == 2);
    CHECK(Json::parse(sing.err).at("error") == "numerical_error");

    spit(cfg, R"({"market": {"n_firms": 6}, "profile": "segmented"})");
    REQUIRE(run({"verify-equilibrium", "--config", cfg.string(), "--out", out.string()}).code == 0);
    CHECK(Json::parse(slurp(out)).at("report").at("verified") == true);

    spit(cfg, R"({"market": {"attentive_share": 0.5, "attention": 0.5}})");
    REQUIRE(run({"tax-sweep", "--config", cfg.string(), "--out", out.string()}).code == 0);
    CHECK(Json::parse(slurp(out)).at("sweep").at("t_second_best").get<double>() == doctest::Approx(1.2));
}

TEST_CASE("report compares pass-through with targets") {
    const auto did = workdir() / "did.json";
    const auto het = workdir() / "het.json";
    if (!fs::exists(did)) {
        REQUIRE(run({"estimate", "--panel", default_panel().string(), "--out", did.string()}).code == 0);
    }
    REQUIRE(run({"estimate", "--panel", default_panel().string(), "--design", "did-het", "--out", het.string()})
                .code == 0);
    const auto dir = workdir() / "report";
    REQUIRE(run({"report", "--fits", did.string(), het.string(), "--out", dir.string(), "--target", "did:T=0.76",
                 "--target", "het:T_x_noShroud=-0.82"})
                .code == 0);
    const auto summary = slurp(dir / "summary.txt");
    CHECK(summary.find("PASS") != std::string::npos);
    CHECK(summary.find("targets: 2 PASS, 0 FAIL") != std::string::npos);
    CHECK(fs::exists(dir / "did_coefficients.csv"));
    CHECK(fs::exists(dir / "het_coefficients.csv"));

    REQUIRE(run({"report", "--fits", did.string(), "--out", dir.string(), "--target", "T=0.2"}).code == 0);
    CHECK(slurp(dir / "summary.txt").find("targets: 0 PASS, 1 FAIL") != std::string::npos);

    const auto r = run({"report", "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(Json::parse(r.err).at("error") == "usage_error");
    CHECK(run({"report", "--fits", did.string(), "--out", dir.string(), "--target", "T"}).code == 1);
}

TEST_CASE("binary exit codes and one-line JSON errors") {
    CHECK(run_binary("--version").code == 0);
    CHECK(run_binary("--help").code == 0);
    const auto u = run_binary("simulate");
    CHECK(u.code == 1);
    CHECK(std::count(u.err.begin(), u.err.end(), '\n') == 1);
    CHECK(Json::parse(u.err).at("error") == "usage_error");

    const auto cfg = workdir() / "sing.json";
    spit(cfg, R"({"passthrough_monopoly": {"eta_demand": 2, "eta_supply": "inf", "eta_ms": -1}})");
    const auto n = run_binary("theory --config " + cfg.string() + " --out " + (workdir() / "s.json").string());
    CHECK(n.code == 2);
    CHECK(Json::parse(n.err).at("exit_code") == 2);
}
