// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include "shroudlab/econometrics.hpp"
#include "shroudlab/error.hpp"

namespace shroudlab::econ {

using datagen::PanelRow;

std::string_view to_string(Design d) {
    switch (d) {
        case Design::did: return "did";
        case Design::event_study: return "event_study";
        case Design::did_het: return "did_het";
        case Design::event_study_het: return "event_study_het";
    }
    return "did";
}

std::string_view to_string(FeDim d) {
    switch (d) {
        case FeDim::agency: return "agency";
        case FeDim::week: return "week";
        case FeDim::quarter: return "quarter";
        case FeDim::league: return "league";
        case FeDim::league_agency: return "league_agency";
    }
    return "agency";
}

std::string_view to_string(ClusterDim d) {
    switch (d) {
        case ClusterDim::agency: return "agency";
        case ClusterDim::league: return "league";
        case ClusterDim::week: return "week";
        case ClusterDim::quarter: return "quarter";
        case ClusterDim::event: return "event";
    }
    return "agency";
}

std::string_view to_string(SampleFilter f) {
    switch (f) {
        case SampleFilter::all: return "all";
        case SampleFilter::soccer_only: return "soccer_only";
        case SampleFilter::excl_cross: return "excl_cross";
    }
    return "all";
}

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view text, const E (&values)[N], std::string_view what) {
    std::string key(text);
    std::replace(key.begin(), key.end(), '-', '_');
    std::string options;
    for (E v : values) {
        if (to_string(v) == key) return v;
        if (!options.empty()) options += ", ";
        options += to_string(v);
    }
    throw ValidationError("unknown " + std::string(what) + " '" + std::string(text) + "' (expected one of " +
                          options + ")");
}

}  // namespace

Design parse_design(std::string_view text) {
    static constexpr Design all[] = {Design::did, Design::event_study, Design::did_het, Design::event_study_het};
    return parse_enum(text, all, "design");
}

FeDim parse_fe(std::string_view text) {
    static constexpr FeDim all[] = {FeDim::agency, FeDim::week, FeDim::quarter, FeDim::league,
                                    FeDim::league_agency};
    return parse_enum(text, all, "fixed effect");
}

ClusterDim parse_cluster(std::string_view text) {
    static constexpr ClusterDim all[] = {ClusterDim::agency, ClusterDim::league, ClusterDim::week,
                                         ClusterDim::quarter, ClusterDim::event};
    return parse_enum(text, all, "cluster dimension");
}

SampleFilter parse_filter(std::string_view text) {
    static constexpr SampleFilter all[] = {SampleFilter::all, SampleFilter::soccer_only,
                                           SampleFilter::excl_cross};
    return parse_enum(text, all, "sample filter");
}

std::vector<FeDim> RegressionSpec::effective_fixed_effects() const {
    if (fixed_effects) return *fixed_effects;
    if (design == Design::did || design == Design::did_het) return {FeDim::agency, FeDim::week, FeDim::league};
    return {FeDim::agency, FeDim::quarter, FeDim::league};
}

std::string event_name(int k, bool interacted) {
    std::string s = "D[" + std::to_string(k) + "]";
    if (interacted) s += "_x_noShroud";
    return s;
}

const Coefficient* RegressionFit::find(std::string_view name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

const Coefficient& RegressionFit::coefficient(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw ValidationError("no coefficient named '" + std::string(name) + "'");
}

double passthrough_from_beta(double beta, double tax_rate) {
    if (!(tax_rate > 0.0)) throw ValidationError("pass-through needs a positive tax rate");
    return beta / tax_rate;
}

namespace {

bool keep_row(const PanelRow& r, SampleFilter filter) {
    switch (filter) {
        case SampleFilter::all: return true;
        case SampleFilter::soccer_only: return r.sport == datagen::Sport::soccer;
        case SampleFilter::excl_cross: {
            const bool domestic = datagen::is_domestic_league(r.league_id);
            return r.treated ? domestic : !domestic;
        }
    }
    return true;
}

// Dense codes in sorted key order; hashing first keeps the sort small.
template <class Key, class Get>
std::pair<std::vector<std::uint32_t>, std::uint32_t> encode(const std::vector<const PanelRow*>& rows, Get get) {
    std::unordered_map<Key, std::uint32_t> first;
    std::vector<std::uint32_t> raw(rows.size());
    std::vector<Key> keys;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Key k = get(*rows[i]);
        auto [it, inserted] = first.try_emplace(k, static_cast<std::uint32_t>(keys.size()));
        if (inserted) keys.push_back(std::move(k));
        raw[i] = it->second;
    }
    std::vector<std::uint32_t> order(keys.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
    std::vector<std::uint32_t> rank(keys.size());
    for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    for (auto& c : raw) c = rank[c];
    return {std::move(raw), static_cast<std::uint32_t>(keys.size())};
}

FixedEffect make_fe(FeDim dim, const std::vector<const PanelRow*>& rows) {
    FixedEffect fe;
    fe.name = std::string(to_string(dim));
    std::pair<std::vector<std::uint32_t>, std::uint32_t> enc;
    switch (dim) {
        case FeDim::agency:
            enc = encode<std::string>(rows, [](const PanelRow& r) { return r.agency_id; });
            break;
        case FeDim::week:
            enc = encode<int>(rows, [](const PanelRow& r) { return r.week; });
            break;
        case FeDim::quarter:
            enc = encode<int>(rows, [](const PanelRow& r) { return r.quarter; });
            break;
        case FeDim::league:
            enc = encode<std::string>(rows, [](const PanelRow& r) { return r.league_id; });
            break;
        case FeDim::league_agency:
            enc = encode<std::string>(rows, [](const PanelRow& r) { return r.league_id + "|" + r.agency_id; });
            break;
    }
    fe.codes = std::move(enc.first);
    fe.n_levels = enc.second;
    return fe;
}

ClusterIndex make_clusters(ClusterDim dim, const std::vector<const PanelRow*>& rows) {
    std::pair<std::vector<std::uint32_t>, std::uint32_t> enc;
    switch (dim) {
        case ClusterDim::agency:
            enc = encode<std::string>(rows, [](const PanelRow& r) { return r.agency_id; });
            break;
        case ClusterDim::league:
            enc = encode<std::string>(rows, [](const PanelRow& r) { return r.league_id; });
            break;
        case ClusterDim::week:
            enc = encode<int>(rows, [](const PanelRow& r) { return r.week; });
            break;
        case ClusterDim::quarter:
            enc = encode<int>(rows, [](const PanelRow& r) { return r.quarter; });
            break;
        case ClusterDim::event:
            enc = encode<std::uint64_t>(rows, [](const PanelRow& r) { return r.event_id; });
            break;
    }
    return ClusterIndex{std::move(enc.first), enc.second};
}

bool no_shroud(const PanelRow& r) { return r.treated && r.post && !r.policy_active; }

struct Column {
    std::string name;
    std::optional<int> k;
    bool interacted = false;
};

void validate_spec(const RegressionSpec& spec) {
    if (spec.response != "effective_price" && spec.response != "posted_price") {
        throw ValidationError("unknown response '" + spec.response + "' (expected effective_price or posted_price)");
    }
    if (!(spec.tax_rate > 0.0) || !(spec.tax_rate < 1.0)) throw ValidationError("tax_rate must lie in (0, 1)");
    if (spec.k_min > spec.k_max) throw ValidationError("k_min must not exceed k_max");
    if (spec.baseline < spec.k_min || spec.baseline > spec.k_max) {
        throw ValidationError("baseline period must lie inside [k_min, k_max]");
    }
    const auto fes = spec.effective_fixed_effects();
    std::set<FeDim> unique(fes.begin(), fes.end());
    if (unique.size() != fes.size()) throw ValidationError("duplicate fixed-effect dimension");
}

}  // namespace

RegressionFit estimate(const std::vector<PanelRow>& all_rows, const RegressionSpec& spec) {
    validate_spec(spec);
    RegressionFit fit;
    fit.design = spec.design;
    fit.tax_rate = spec.tax_rate;
    fit.baseline = spec.baseline;
    fit.response = spec.response;
    fit.cluster = std::string(to_string(spec.cluster));

    std::vector<const PanelRow*> rows;
    rows.reserve(all_rows.size());
    for (const auto& r : all_rows) {
        if (keep_row(r, spec.filter)) rows.push_back(&r);
    }
    if (rows.empty()) throw ValidationError("sample is empty after the '" + std::string(to_string(spec.filter)) + "' filter");

    bool any_treated = false;
    bool any_control = false;
    int reform_week = -1;
    int reform_quarter = 0;
    for (const auto* r : rows) {
        (r->treated ? any_treated : any_control) = true;
        if (r->post && (reform_week < 0 || r->week < reform_week)) {
            reform_week = r->week;
            reform_quarter = r->quarter;
        }
    }
    if (!any_treated) throw ValidationError("sample has no treated rows");
    if (!any_control) throw ValidationError("sample has no control rows");
    if (reform_week < 0) throw ValidationError("sample has no post-reform rows");

    const bool event = spec.design == Design::event_study || spec.design == Design::event_study_het;
    const bool het = spec.design == Design::did_het || spec.design == Design::event_study_het;

    std::vector<Column> columns;
    if (!event) {
        bool any_post_treated = false;
        bool any_pre = false;
        std::size_t treated_post = 0;
        std::size_t unshrouded = 0;
        for (const auto* r : rows) {
            if (r->treated && r->post) {
                any_post_treated = true;
                ++treated_post;
                if (!r->policy_active) ++unshrouded;
            }
            if (!r->post) any_pre = true;
        }
        if (!any_post_treated) throw ValidationError("no treated post-reform rows");
        if (!any_pre) throw ValidationError("sample has no pre-reform rows");
        columns.push_back({"T", std::nullopt, false});
        if (het) {
            if (unshrouded == 0 || unshrouded == treated_post) {
                throw ValidationError("noShroud indicator does not vary among treated post-reform rows");
            }
            columns.push_back({"T_x_noShroud", std::nullopt, true});
        }
    } else {
        // Treated rows outside the event window are dropped.
        std::vector<const PanelRow*> kept;
        kept.reserve(rows.size());
        std::map<int, std::pair<std::size_t, std::size_t>> per_k;  // k -> (rows, unshrouded)
        for (const auto* r : rows) {
            if (r->treated) {
                const int k = r->quarter - reform_quarter;
                if (k < spec.k_min || k > spec.k_max) {
                    ++fit.dropped_rows;
                    continue;
                }
                auto& cell = per_k[k];
                ++cell.first;
                if (no_shroud(*r)) ++cell.second;
            }
            kept.push_back(r);
        }
        rows.swap(kept);
        if (fit.dropped_rows > 0) {
            fit.warnings.push_back("dropped " + std::to_string(fit.dropped_rows) +
                                   " treated rows outside the event window [" + std::to_string(spec.k_min) + ", " +
                                   std::to_string(spec.k_max) + "]");
        }
        std::size_t pre_periods = 0;
        for (const auto& [k, cell] : per_k) {
            if (k < 0) ++pre_periods;
        }
        if (pre_periods < 2) {
            throw ValidationError("event study needs at least 2 pre-reform periods for treated units, found " +
                                  std::to_string(pre_periods));
        }
        if (!per_k.count(spec.baseline)) {
            throw ValidationError("no treated rows in the baseline period k=" + std::to_string(spec.baseline));
        }
        for (int k = spec.k_min; k <= spec.k_max; ++k) {
            if (k == spec.baseline) continue;
            if (!per_k.count(k)) {
                fit.warnings.push_back("no treated rows at k=" + std::to_string(k) + "; coefficient omitted");
                continue;
            }
            columns.push_back({event_name(k), k, false});
        }
        if (het) {
            for (int k = std::max(0, spec.k_min); k <= spec.k_max; ++k) {
                if (k == spec.baseline) continue;
                const auto it = per_k.find(k);
                if (it == per_k.end()) continue;
                const auto [n_k, un_k] = it->second;
                if (un_k == 0 || un_k == n_k) {
                    fit.warnings.push_back("noShroud does not vary at k=" + std::to_string(k) +
                                           "; interaction omitted");
                    continue;
                }
                columns.push_back({event_name(k, true), k, true});
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto kcols = static_cast<Eigen::Index>(columns.size());
    Matrix X = Matrix::Zero(n, kcols);
    Matrix ym(n, 1);
    const bool effective = spec.response == "effective_price";
    std::unordered_map<int, Eigen::Index> base_col;
    std::unordered_map<int, Eigen::Index> int_col;
    for (Eigen::Index j = 0; j < kcols; ++j) {
        const auto& c = columns[static_cast<std::size_t>(j)];
        if (c.k) (c.interacted ? int_col : base_col)[*c.k] = j;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = *rows[static_cast<std::size_t>(i)];
        ym(i, 0) = effective ? r.effective_price : r.posted_price;
        if (!std::isfinite(ym(i, 0))) throw ValidationError("non-finite response in row " + std::to_string(i));
        if (!event) {
            const bool t = r.treated && r.post;
            X(i, 0) = t ? 1.0 : 0.0;
            if (het) X(i, 1) = no_shroud(r) ? 1.0 : 0.0;
        } else if (r.treated) {
            const int k = r.quarter - reform_quarter;
            if (auto it = base_col.find(k); it != base_col.end()) X(i, it->second) = 1.0;
            if (het && no_shroud(r)) {
                if (auto it = int_col.find(k); it != int_col.end()) X(i, it->second) = 1.0;
            }
        }
    }

    const double y_mean = ym.col(0).mean();
    const double tss = (ym.col(0).array() - y_mean).square().sum();
    const Vector x_mean = X.colwise().mean().transpose();
    std::vector<double> ref_norms(static_cast<std::size_t>(kcols));
    for (Eigen::Index j = 0; j < kcols; ++j) ref_norms[static_cast<std::size_t>(j)] = X.col(j).norm();

    std::vector<FixedEffect> fes;
    for (FeDim d : spec.effective_fixed_effects()) {
        fes.push_back(make_fe(d, rows));
        fit.fixed_effects.push_back(fes.back().name);
    }
    const auto diag_x = absorb_fixed_effects(X, fes, spec.absorb);
    const auto diag_y = absorb_fixed_effects(ym, fes, spec.absorb);
    fit.absorption.iterations = std::max(diag_x.iterations, diag_y.iterations);
    fit.absorption.final_change = std::max(diag_x.final_change, diag_y.final_change);
    fit.absorption.converged = diag_x.converged && diag_y.converged;

    std::vector<std::string> names;
    for (const auto& c : columns) names.push_back(c.name);
    const Vector y = ym.col(0);
    const OlsResult res = ols(X, y, names, ref_norms);

    fit.n_obs = static_cast<std::size_t>(n);
    fit.n_regressors = static_cast<std::size_t>(kcols);
    fit.n_absorbed = absorbed_dof(fes);
    const ClusterIndex clusters = make_clusters(spec.cluster, rows);
    fit.n_clusters = clusters.n_clusters;
    fit.covariance = cluster_covariance(res.r_factor, X, res.residuals, clusters,
                                        DofSpec{fit.n_obs, fit.n_regressors, fit.n_absorbed});

    const double ssr = res.residuals.squaredNorm();
    const double within_tss = y.squaredNorm();
    fit.r2 = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
    fit.r2_within = within_tss > 0.0 ? 1.0 - ssr / within_tss : 0.0;
    fit.constant = y_mean - x_mean.dot(res.beta);

    for (Eigen::Index j = 0; j < kcols; ++j) {
        const auto& c = columns[static_cast<std::size_t>(j)];
        Coefficient coef;
        coef.name = c.name;
        coef.estimate = res.beta[j];
        coef.std_error = std::sqrt(std::max(0.0, fit.covariance(j, j)));
        coef.t_stat = coef.std_error > 0.0 ? coef.estimate / coef.std_error : 0.0;
        coef.event_time = c.k;
        coef.interacted = c.interacted;
        fit.coefficients.push_back(std::move(coef));
    }
    return fit;
}

RegressionFit did_average(const std::vector<PanelRow>& rows, RegressionSpec spec) {
    spec.design = Design::did;
    return estimate(rows, spec);
}

RegressionFit event_study(const std::vector<PanelRow>& rows, RegressionSpec spec) {
    spec.design = Design::event_study;
    return estimate(rows, spec);
}

RegressionFit did_heterogeneous(const std::vector<PanelRow>& rows, RegressionSpec spec) {
    spec.design = Design::did_het;
    return estimate(rows, spec);
}

RegressionFit event_study_heterogeneous(const std::vector<PanelRow>& rows, RegressionSpec spec) {
    spec.design = Design::event_study_het;
    return estimate(rows, spec);
}

std::vector<EventPathPoint> event_paths(const RegressionFit& fit) {
    std::map<int, std::size_t> base;
    std::map<int, std::size_t> inter;
    for (std::size_t j = 0; j < fit.coefficients.size(); ++j) {
        const auto& c = fit.coefficients[j];
        if (!c.event_time) continue;
        (c.interacted ? inter : base)[*c.event_time] = j;
    }
    if (base.empty()) throw ValidationError("fit has no event-time coefficients");

    std::set<int> ks;
    for (const auto& [k, j] : base) ks.insert(k);
    ks.insert(fit.baseline);

    std::vector<EventPathPoint> out;
    for (int k : ks) {
        EventPathPoint p;
        p.k = k;
        const auto b = base.find(k);
        if (b != base.end()) {
            p.shrouded = fit.coefficients[b->second].estimate;
            p.shrouded_se = fit.coefficients[b->second].std_error;
            const auto g = inter.find(k);
            if (g != inter.end()) {
                const auto i = static_cast<Eigen::Index>(b->second);
                const auto m = static_cast<Eigen::Index>(g->second);
                p.unshrouded = p.shrouded + fit.coefficients[g->second].estimate;
                const double var = fit.covariance(i, i) + fit.covariance(m, m) + 2.0 * fit.covariance(i, m);
                p.unshrouded_se = std::sqrt(std::max(0.0, var));
            }
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace shroudlab::econ
