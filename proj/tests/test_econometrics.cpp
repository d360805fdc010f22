// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "shroudlab/datagen.hpp"
#include "shroudlab/econometrics.hpp"
#include "shroudlab/error.hpp"
#include "shroudlab/rng.hpp"

using namespace shroudlab;
using namespace shroudlab::econ;
using datagen::PanelRow;

namespace {

FixedEffect fe_of(std::string name, const std::vector<std::uint32_t>& codes) {
    FixedEffect f;
    f.name = std::move(name);
    f.codes = codes;
    f.n_levels = *std::max_element(codes.begin(), codes.end()) + 1;
    return f;
}

// Cell (agency, period) observed twice at mean +- e so cell means are exact.
void add_cell(std::vector<PanelRow>& rows, const std::string& agency, bool treated, int quarter, bool post,
              double mean, bool policy = false) {
    for (double e : {-0.003, 0.003}) {
        auto r = oracle::row(agency, treated, quarter * 13, quarter, post, mean + e, policy);
        r.event_id = static_cast<std::uint64_t>(rows.size());
        rows.push_back(r);
    }
}

RegressionSpec spec_with(std::vector<FeDim> fes) {
    RegressionSpec s;
    s.fixed_effects = std::move(fes);
    return s;
}

}  // namespace

TEST_CASE("one fixed effect is a single exact sweep") {
    CounterRng rng(1, {1});
    const std::vector<std::uint32_t> codes{0, 1, 2, 0, 1, 0, 2, 2, 1, 3};
    Matrix m(10, 2);
    for (Eigen::Index i = 0; i < 10; ++i) m(i, 0) = rng.normal(), m(i, 1) = rng.normal();
    const Matrix orig = m;
    const auto diag = absorb_fixed_effects(m, {fe_of("g", codes)});
    CHECK(diag.iterations == 1);
    CHECK(diag.converged);
    for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK((m.col(j) - oracle::group_demean(orig.col(j), codes)).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("balanced two-way absorption equals the double-demeaning closed form") {
    const int A = 6;
    const int W = 8;
    CounterRng rng(3, {1});
    Matrix m(A * W, 1);
    std::vector<std::uint32_t> ac;
    std::vector<std::uint32_t> wc;
    Eigen::MatrixXd grid(A, W);
    for (int a = 0; a < A; ++a) {
        for (int w = 0; w < W; ++w) {
            grid(a, w) = rng.normal();
            m(a * W + w, 0) = grid(a, w);
            ac.push_back(static_cast<std::uint32_t>(a));
            wc.push_back(static_cast<std::uint32_t>(w));
        }
    }
    absorb_fixed_effects(m, {fe_of("a", ac), fe_of("w", wc)});
    const Eigen::VectorXd rm = grid.rowwise().mean();
    const Eigen::RowVectorXd cm = grid.colwise().mean();
    const double gm = grid.mean();
    double worst = 0.0;
    for (int a = 0; a < A; ++a) {
        for (int w = 0; w < W; ++w) {
            worst = std::max(worst, std::abs(m(a * W + w, 0) - (grid(a, w) - rm[a] - cm[w] + gm)));
        }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("absorption errors") {
    Matrix m = Matrix::Ones(4, 1);
    auto f = fe_of("g", {0, 1, 0, 1});
    CHECK_THROWS_AS(absorb_fixed_effects(m, {f}, AbsorbOptions{0.0, 10}), ValidationError);
    f.codes.pop_back();
    CHECK_THROWS_AS(absorb_fixed_effects(m, {f}), ValidationError);

    // A long chain converges slowly; one sweep is not enough.
    const int n = 40;
    std::vector<std::uint32_t> a;
    std::vector<std::uint32_t> b;
    Matrix x(2 * n, 1);
    for (int i = 0; i < n; ++i) {
        a.push_back(static_cast<std::uint32_t>(i));
        b.push_back(static_cast<std::uint32_t>(i));
        a.push_back(static_cast<std::uint32_t>(i));
        b.push_back(static_cast<std::uint32_t>(i + 1));
        x(2 * i, 0) = i;
        x(2 * i + 1, 0) = -i;
    }
    CHECK_THROWS_AS(absorb_fixed_effects(x, {fe_of("a", a), fe_of("b", b)}, AbsorbOptions{1e-12, 2}),
                    NumericalError);
}

TEST_CASE("absorbed degrees of freedom") {
    // connected agency x week
    const auto a = fe_of("a", {0, 0, 1, 1, 2});
    const auto w = fe_of("w", {0, 1, 0, 1, 1});
    CHECK(absorbed_dof({a}) == 3);
    CHECK(absorbed_dof({a, w}) == 3 + 2 - 1);
    // two disconnected components
    const auto a2 = fe_of("a", {0, 0, 1, 1});
    const auto w2 = fe_of("w", {0, 1, 2, 3});
    CHECK(absorbed_dof({a2, w2}) == 2 + 4 - 2);
    const auto l = fe_of("l", {0, 1, 2, 0, 1});
    CHECK(absorbed_dof({a, w, l}) == 4 + 2);
    CHECK(absorbed_dof({}) == 0);
}

TEST_CASE("OLS closed forms and rank checks") {
    Matrix X(4, 2);
    X << 1, 1, 1, 2, 1, 3, 1, 4;
    Vector y(4);
    y << 2, 4, 5, 4;
    const auto r = ols(X, y, {"const", "x"});
    CHECK(r.beta[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.beta[1] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK((X.transpose() * r.residuals).cwiseAbs().maxCoeff() <= 1e-13);
    // R'R = X'X
    CHECK((r.r_factor.transpose() * r.r_factor - X.transpose() * X).cwiseAbs().maxCoeff() <= 1e-12);

    Vector exact = X * Eigen::Vector2d(0.5, -1.5);
    const auto e = ols(X, exact);
    CHECK(e.residuals.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(e.beta[1] == doctest::Approx(-1.5).epsilon(1e-14));

    Matrix dup(4, 3);
    dup << X, X.col(1);
    CHECK_THROWS_WITH_AS(ols(dup, y, {"const", "x", "x_copy"}), doctest::Contains("x_copy"), NumericalError);
    CHECK_THROWS_AS(ols(X.topRows(2), y.head(2)), ValidationError);
    CHECK_THROWS_AS(ols(X, y.head(3)), ValidationError);
}

TEST_CASE("OLS agrees with a pivoted solver on a tall random problem") {
    CounterRng rng(8, {1});
    const Eigen::Index n = 20000;
    Matrix X(n, 4);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) X(i, j) = rng.normal();
        y[i] = X(i, 0) - 2 * X(i, 3) + rng.normal();
    }
    const auto r = ols(X, y);
    CHECK((r.beta - oracle::lstsq(X, y)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("cluster sandwich against explicit oracles") {
    CounterRng rng(21, {1});
    const Eigen::Index n = 30;
    Matrix X(n, 2);
    Vector y(n);
    std::vector<std::uint32_t> g;
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = rng.normal();
        y[i] = 0.3 + 0.8 * X(i, 1) + rng.normal();
        g.push_back(static_cast<std::uint32_t>(i % 3));
    }
    const auto r = ols(X, y);
    const DofSpec dof{30, 2, 0};
    const double c = cluster_correction(3, dof);
    CHECK(c == doctest::Approx(1.5 * 29.0 / 28.0));
    const Matrix V = cluster_covariance(X, r.residuals, ClusterIndex{g, 3}, dof);
    CHECK((V - oracle::block_sandwich(X, r.residuals, g, c)).cwiseAbs().maxCoeff() <= 1e-10);
    const Matrix V2 = cluster_covariance(r.r_factor, X, r.residuals, ClusterIndex{g, 3}, dof);
    CHECK((V2 - V).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((V - V.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // singleton clusters reduce to scaled HC0
    std::vector<std::uint32_t> each(static_cast<std::size_t>(n));
    std::iota(each.begin(), each.end(), 0u);
    const Matrix Vh = cluster_covariance(X, r.residuals, ClusterIndex{each, 30}, dof);
    const double ch = cluster_correction(30, dof);
    CHECK((Vh - ch * oracle::hc0(X, r.residuals)).cwiseAbs().maxCoeff() <= 1e-12);

    std::vector<std::uint32_t> one(static_cast<std::size_t>(n), 0u);
    CHECK_THROWS_AS(cluster_covariance(X, r.residuals, ClusterIndex{one, 1}, dof), ValidationError);
    CHECK_THROWS_AS(cluster_correction(5, DofSpec{10, 4, 6}), ValidationError);
}

TEST_CASE("cluster standard errors are calibrated under within-cluster correlation") {
    // 40 clusters of 25; regressor and error both carry a cluster component.
    const int reps = 400;
    std::vector<double> betas;
    double se_sum = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        CounterRng rng(1000 + static_cast<std::uint64_t>(rep), {5});
        const Eigen::Index n = 1000;
        Matrix X(n, 2);
        Vector y(n);
        std::vector<std::uint32_t> g;
        double xg = 0.0;
        double ug = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i % 25 == 0) xg = rng.normal(), ug = rng.normal();
            X(i, 0) = 1.0;
            X(i, 1) = xg + rng.normal();
            y[i] = 0.5 * X(i, 1) + ug + rng.normal();
            g.push_back(static_cast<std::uint32_t>(i / 25));
        }
        const auto r = ols(X, y);
        const Matrix V = cluster_covariance(r.r_factor, X, r.residuals, ClusterIndex{g, 40}, DofSpec{1000, 2, 0});
        betas.push_back(r.beta[1]);
        se_sum += std::sqrt(V(1, 1));
    }
    const double mean = std::accumulate(betas.begin(), betas.end(), 0.0) / reps;
    double ss = 0.0;
    for (double b : betas) ss += (b - mean) * (b - mean);
    const double sd = std::sqrt(ss / (reps - 1));
    const double avg_se = se_sum / reps;
    MESSAGE("empirical sd " << sd << ", mean clustered se " << avg_se);
    CHECK(std::abs(avg_se / sd - 1.0) < 0.15);
}

TEST_CASE("HDFE DID equals dummy-variable OLS on an unbalanced toy panel") {
    const auto rows = oracle::toy_panel(17);
    RegressionSpec spec;  // agency, week, league; clustered by agency
    const auto fit = did_average(rows, spec);
    REQUIRE(fit.coefficients.size() == 1);
    CHECK(fit.n_absorbed == 5 + 9 + 2);

    const auto dummy = oracle::dummy_did(rows);
    CHECK(dummy.columns == 1 + 16);
    CHECK(std::abs(fit.coefficients[0].estimate - dummy.beta) <= 1e-8);
    CHECK(std::abs(fit.coefficients[0].std_error - dummy.se) <= 1e-10);
    CHECK(fit.r2 > fit.r2_within);
}

TEST_CASE("four-cell DID") {
    std::vector<PanelRow> rows;
    add_cell(rows, "T", true, 0, false, 0.060);
    add_cell(rows, "T", true, 1, true, 0.105);
    add_cell(rows, "C", false, 0, false, 0.070);
    add_cell(rows, "C", false, 1, true, 0.075);
    const auto fit = did_average(rows, spec_with({FeDim::agency, FeDim::week}));
    // (0.105 - 0.060) - (0.075 - 0.070)
    CHECK(fit.coefficient("T").estimate == doctest::Approx(0.040).epsilon(1e-12));
    CHECK(fit.n_obs == 8);
    CHECK(fit.n_clusters == 2);
    CHECK(passthrough_from_beta(fit.coefficient("T").estimate) == doctest::Approx(0.8));
}

TEST_CASE("heterogeneous DID with three agencies") {
    std::vector<PanelRow> rows;
    add_cell(rows, "S", true, 0, false, 0.060);
    add_cell(rows, "S", true, 1, true, 0.110, true);  // shrouds
    add_cell(rows, "U", true, 0, false, 0.065);
    add_cell(rows, "U", true, 1, true, 0.075);  // posts the tax openly
    add_cell(rows, "C", false, 0, false, 0.070);
    add_cell(rows, "C", false, 1, true, 0.072);
    const auto fit = did_heterogeneous(rows, spec_with({FeDim::agency, FeDim::week}));
    // b1 = dS - dC = 0.048; b2 = dU - dS = 0.010 - 0.050
    CHECK(fit.coefficient("T").estimate == doctest::Approx(0.048).epsilon(1e-12));
    CHECK(fit.coefficient("T_x_noShroud").estimate == doctest::Approx(-0.040).epsilon(1e-12));
    CHECK(fit.coefficient("T_x_noShroud").interacted);
}

TEST_CASE("event-study and heterogeneous event-study contrasts") {
    // quarters 0..3, reform at quarter 2; effects follow the model exactly
    const double quarter_fx[] = {0.0, 0.002, -0.001, 0.003};
    const double lead = 0.001;
    const double shrouded[] = {0.030, 0.045};
    const double open[] = {0.006, 0.009};
    std::vector<PanelRow> rows;
    for (int q = 0; q < 4; ++q) {
        const bool post = q >= 2;
        const double base = 0.06 + quarter_fx[q];
        const double s = q == 0 ? lead : (post ? shrouded[q - 2] : 0.0);
        const double u = q == 0 ? lead : (post ? open[q - 2] : 0.0);
        add_cell(rows, "S", true, q, post, base + 0.004 + s, post);
        add_cell(rows, "U", true, q, post, base - 0.002 + u);
        add_cell(rows, "C1", false, q, post, base + 0.01);
        add_cell(rows, "C2", false, q, post, base - 0.01);
    }
    RegressionSpec spec;
    spec.k_min = -2;
    spec.k_max = 1;
    const auto het = event_study_heterogeneous(rows, spec);
    CHECK(het.coefficient("D[-2]").estimate == doctest::Approx(lead).epsilon(1e-10));
    CHECK(het.coefficient("D[0]").estimate == doctest::Approx(shrouded[0]).epsilon(1e-10));
    CHECK(het.coefficient("D[1]").estimate == doctest::Approx(shrouded[1]).epsilon(1e-10));
    CHECK(het.coefficient("D[0]_x_noShroud").estimate == doctest::Approx(open[0] - shrouded[0]).epsilon(1e-10));
    CHECK(het.find("D[-1]") == nullptr);
    CHECK(het.find("D[-2]_x_noShroud") == nullptr);

    const auto paths = event_paths(het);
    REQUIRE(paths.size() == 4);
    CHECK(paths[1].k == -1);
    CHECK(paths[1].shrouded == 0.0);
    REQUIRE(paths[3].unshrouded);
    CHECK(*paths[3].unshrouded == doctest::Approx(open[1]).epsilon(1e-10));

    // pooled event study averages the two treated agencies after the reform
    const auto pooled = event_study(rows, spec);
    CHECK(pooled.coefficient("D[0]").estimate == doctest::Approx((shrouded[0] + open[0]) / 2).epsilon(1e-10));
    CHECK(pooled.coefficients.size() == 3);
    CHECK_FALSE(event_paths(pooled)[2].unshrouded);
}

TEST_CASE("event window drops treated rows with a warning") {
    std::vector<PanelRow> rows;
    for (int q = 0; q < 6; ++q) {
        add_cell(rows, "T", true, q, q >= 4, 0.06 + (q >= 4 ? 0.03 : 0.0));
        add_cell(rows, "C", false, q, q >= 4, 0.06 + 0.001 * q);
    }
    RegressionSpec spec;
    spec.k_min = -3;
    spec.k_max = 1;
    const auto fit = event_study(rows, spec);
    CHECK(fit.dropped_rows == 2);  // quarter 0 is k = -4
    REQUIRE_FALSE(fit.warnings.empty());
    CHECK(fit.warnings[0].find("dropped 2") != std::string::npos);
}

TEST_CASE("design errors") {
    std::vector<PanelRow> controls;
    add_cell(controls, "C", false, 0, false, 0.06);
    add_cell(controls, "C", false, 1, true, 0.06);
    CHECK_THROWS_WITH_AS(did_average(controls), doctest::Contains("no treated"), ValidationError);

    std::vector<PanelRow> treated;
    add_cell(treated, "T", true, 0, false, 0.06);
    add_cell(treated, "T", true, 1, true, 0.07);
    CHECK_THROWS_WITH_AS(did_average(treated), doctest::Contains("no control"), ValidationError);

    std::vector<PanelRow> all_shroud = treated;
    for (auto& r : all_shroud) r.policy_active = r.post;
    add_cell(all_shroud, "C", false, 0, false, 0.06);
    add_cell(all_shroud, "C", false, 1, true, 0.06);
    CHECK_THROWS_WITH_AS(did_heterogeneous(all_shroud, spec_with({FeDim::agency, FeDim::week})),
                         doctest::Contains("noShroud"), ValidationError);

    // only one pre-reform period for the treated agency
    std::vector<PanelRow> short_pre;
    add_cell(short_pre, "T", true, 0, false, 0.06);
    add_cell(short_pre, "T", true, 1, true, 0.09);
    add_cell(short_pre, "C", false, 0, false, 0.06);
    add_cell(short_pre, "C", false, 1, true, 0.06);
    CHECK_THROWS_WITH_AS(event_study(short_pre), doctest::Contains("2 pre-reform"), ValidationError);

    RegressionSpec bad;
    bad.response = "odds";
    CHECK_THROWS_AS(did_average(all_shroud, bad), ValidationError);
    bad = {};
    bad.baseline = 30;
    CHECK_THROWS_AS(event_study(all_shroud, bad), ValidationError);
    CHECK_THROWS_AS(passthrough_from_beta(0.04, 0.0), ValidationError);
    CHECK_THROWS_AS(parse_design("triple_diff"), ValidationError);
    CHECK(parse_design("event-study-het") == Design::event_study_het);
}

TEST_CASE("treatment collinear with the agency effect is named") {
    // the treated agency is only observed after the reform
    std::vector<PanelRow> rows;
    add_cell(rows, "T", true, 1, true, 0.09);
    add_cell(rows, "T", true, 2, true, 0.09);
    add_cell(rows, "C", false, 0, false, 0.06);
    add_cell(rows, "C", false, 1, true, 0.06);
    add_cell(rows, "C", false, 2, true, 0.06);
    add_cell(rows, "D", false, 0, false, 0.05);
    add_cell(rows, "D", false, 2, true, 0.05);
    CHECK_THROWS_WITH_AS(did_average(rows, spec_with({FeDim::agency, FeDim::week})), doctest::Contains("'T'"),
                         NumericalError);
}

TEST_CASE("estimates are invariant to level shifts and row order") {
    const auto rows = datagen::generate_panel(oracle::small_config(5));
    const auto base = did_heterogeneous(rows);

    auto shifted = rows;
    for (auto& r : shifted) r.effective_price += 0.5;
    auto permuted = rows;
    std::mt19937_64 gen(99);
    std::shuffle(permuted.begin(), permuted.end(), gen);

    for (const auto& other : {did_heterogeneous(shifted), did_heterogeneous(permuted)}) {
        for (std::size_t j = 0; j < base.coefficients.size(); ++j) {
            CHECK(std::abs(other.coefficients[j].estimate - base.coefficients[j].estimate) <= 1e-10);
            CHECK(std::abs(other.coefficients[j].std_error - base.coefficients[j].std_error) <= 1e-10);
        }
    }
    CHECK(did_heterogeneous(shifted).constant == doctest::Approx(base.constant + 0.5).epsilon(1e-9));
}

namespace {

// Every treated agency moves by `effect` at the reform whether it shrouds or not.
datagen::DGPConfig step_config(std::uint64_t seed, double effect) {
    auto c = oracle::small_config(seed);
    for (auto& a : c.agencies) {
        if (!a.treated) continue;
        a.effect_shrouded = effect;
        a.effect_unshrouded = effect;
        a.ramp_weeks = 0;
    }
    return c;
}

}  // namespace

TEST_CASE("a step effect is recovered with flat leads and no heterogeneity") {
    const auto rows = datagen::generate_panel(step_config(31, 0.04));
    const auto did = did_average(rows);
    CHECK(std::abs(did.coefficient("T").estimate - 0.04) <= 0.004);

    const auto het = did_heterogeneous(rows);
    const auto& g = het.coefficient("T_x_noShroud");
    CHECK(std::abs(g.estimate) <= 0.004);

    RegressionSpec spec;
    spec.k_min = -8;
    spec.k_max = 7;
    const auto es = event_study(rows, spec);
    int leads = 0;
    int inside = 0;
    for (const auto& c : es.coefficients) {
        if (*c.event_time < -1) {
            ++leads;
            if (std::abs(c.estimate) <= 2.0 * c.std_error) ++inside;
        } else {
            CHECK(std::abs(c.estimate - 0.04) <= 0.004);
        }
    }
    CHECK(leads == 7);
    CHECK(inside >= 6);
}

TEST_CASE("average estimate over seeds matches the noise-free estimand") {
    auto clean = oracle::small_config(1);
    clean.noise_sd = 0.0;
    clean.cluster_shock_sd = 0.0;
    const double target = did_average(datagen::generate_panel(clean)).coefficient("T").estimate;

    double sum = 0.0;
    double se_sum = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        const auto fit = did_average(datagen::generate_panel(oracle::small_config(500 + static_cast<std::uint64_t>(s))));
        sum += fit.coefficient("T").estimate;
        se_sum += fit.coefficient("T").std_error;
    }
    const double mean = sum / seeds;
    const double se_of_mean = se_sum / seeds / std::sqrt(static_cast<double>(seeds));
    MESSAGE("noise-free " << target << ", seed mean " << mean << ", se of mean " << se_of_mean);
    CHECK(std::abs(mean - target) <= 3.0 * se_of_mean);
}

TEST_CASE("pass-through conversion") {
    CHECK(passthrough_from_beta(0.038) == doctest::Approx(0.76));
    CHECK(passthrough_from_beta(0.046, 0.05) == doctest::Approx(0.92));
    CHECK(passthrough_from_beta(-0.041) == doctest::Approx(-0.82));
}
