// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "shroudlab/datagen.hpp"

namespace shroudlab::econ {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Fixed-effect absorption
// ---------------------------------------------------------------------------

/// One categorical dimension, coded 0..n_levels-1 per observation.
struct FixedEffect {
    std::string name;
    std::vector<std::uint32_t> codes;
    std::uint32_t n_levels = 0;

    /// Codes follow the sorted order of the keys, so they do not depend on
    /// row order.
    template <class Key>
    static FixedEffect from_keys(std::string name, const std::vector<Key>& keys);
};

struct AbsorbOptions {
    double tol = 1e-8;  // max absolute change of any element in a full sweep
    int max_iter = 10000;
};

struct AbsorbDiagnostics {
    int iterations = 0;  // sweeps of the slowest column
    double final_change = 0.0;
    bool converged = false;
};

/// Alternating projections: every column of `data` is demeaned in place
/// over each dimension in turn until a full sweep moves no element by more
/// than tol. One dimension needs exactly one sweep. Throws NumericalError
/// when max_iter sweeps are not enough.
AbsorbDiagnostics absorb_fixed_effects(Matrix& data, const std::vector<FixedEffect>& fes,
                                       const AbsorbOptions& options = {});

/// Parameters absorbed by the fixed effects: all levels of the first
/// dimension, levels minus connected components of the first two for the
/// second, and levels minus one for every further dimension.
std::size_t absorbed_dof(const std::vector<FixedEffect>& fes);

// ---------------------------------------------------------------------------
// OLS and cluster-robust covariance
// ---------------------------------------------------------------------------

struct OlsResult {
    Vector beta;
    Vector residuals;
    Matrix r_factor;  // K x K upper triangular, X = Q R
};

/// Least squares by a row-blocked Householder QR. A column whose diagonal
/// of R falls below 1e-7 of its reference norm (default: its own norm) is
/// reported as collinear by name.
OlsResult ols(const Matrix& X, const Vector& y, const std::vector<std::string>& names = {},
              std::span<const double> reference_norms = {});

struct ClusterIndex {
    std::vector<std::uint32_t> codes;
    std::uint32_t n_clusters = 0;
};

struct DofSpec {
    std::size_t n_obs = 0;
    std::size_t n_regressors = 0;
    std::size_t n_absorbed = 0;
};

/// G/(G-1) * (N-1)/(N-K-n_absorbed).
double cluster_correction(std::size_t n_clusters, const DofSpec& dof);

/// c (X'X)^-1 (sum_g X_g' e_g e_g' X_g) (X'X)^-1.
Matrix cluster_covariance(const Matrix& X, const Vector& residuals, const ClusterIndex& clusters,
                          const DofSpec& dof);
Matrix cluster_covariance(const Matrix& r_factor, const Matrix& X, const Vector& residuals,
                          const ClusterIndex& clusters, const DofSpec& dof);

// ---------------------------------------------------------------------------
// Difference-in-differences designs on a betting-price panel
// ---------------------------------------------------------------------------

enum class Design { did, event_study, did_het, event_study_het };
enum class FeDim { agency, week, quarter, league, league_agency };
enum class ClusterDim { agency, league, week, quarter, event };
enum class SampleFilter { all, soccer_only, excl_cross };

std::string_view to_string(Design d);
std::string_view to_string(FeDim d);
std::string_view to_string(ClusterDim d);
std::string_view to_string(SampleFilter f);
Design parse_design(std::string_view text);
FeDim parse_fe(std::string_view text);
ClusterDim parse_cluster(std::string_view text);
SampleFilter parse_filter(std::string_view text);

struct RegressionSpec {
    Design design = Design::did;
    std::string response = "effective_price";
    /// Unset: agency, week, league for DID; agency, quarter, league for
    /// event studies.
    std::optional<std::vector<FeDim>> fixed_effects;
    ClusterDim cluster = ClusterDim::agency;
    int baseline = -1;
    int k_min = -13;
    int k_max = 25;
    SampleFilter filter = SampleFilter::all;
    double tax_rate = 0.05;
    AbsorbOptions absorb;

    std::vector<FeDim> effective_fixed_effects() const;
};

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double t_stat = 0.0;
    std::optional<int> event_time;
    bool interacted = false;  // x noShroud
};

struct RegressionFit {
    Design design = Design::did;
    std::vector<Coefficient> coefficients;
    Matrix covariance;
    std::size_t n_obs = 0;
    std::size_t n_clusters = 0;
    std::size_t n_regressors = 0;
    std::size_t n_absorbed = 0;
    double r2 = 0.0;
    double r2_within = 0.0;
    /// mean(y) - mean(X)' beta; the absorbed intercept.
    double constant = 0.0;
    double tax_rate = 0.05;
    int baseline = -1;  // omitted event period
    AbsorbDiagnostics absorption;
    std::vector<std::string> fixed_effects;
    std::string cluster;
    std::string response;
    std::size_t dropped_rows = 0;
    std::vector<std::string> warnings;

    const Coefficient& coefficient(std::string_view name) const;
    const Coefficient* find(std::string_view name) const;
};

std::string event_name(int k, bool interacted = false);

RegressionFit estimate(const std::vector<datagen::PanelRow>& rows, const RegressionSpec& spec);

/// p = b1 T + FEs.
RegressionFit did_average(const std::vector<datagen::PanelRow>& rows, RegressionSpec spec = {});
/// p = sum_k b_k D^k + FEs, baseline omitted.
RegressionFit event_study(const std::vector<datagen::PanelRow>& rows, RegressionSpec spec = {});
/// p = b1 T + b2 T x noShroud + FEs.
RegressionFit did_heterogeneous(const std::vector<datagen::PanelRow>& rows, RegressionSpec spec = {});
/// Event study with D^k x noShroud for the post quarters.
RegressionFit event_study_heterogeneous(const std::vector<datagen::PanelRow>& rows,
                                        RegressionSpec spec = {});

struct EventPathPoint {
    int k = 0;
    double shrouded = 0.0;
    double shrouded_se = 0.0;
    std::optional<double> unshrouded;  // b_k + interacted b_k
    std::optional<double> unshrouded_se;
};

/// Shrouded path b_k and unshrouded path b_k + g_k, baseline included as 0.
std::vector<EventPathPoint> event_paths(const RegressionFit& fit);

/// rho = beta / t.
double passthrough_from_beta(double beta, double tax_rate = 0.05);

}  // namespace shroudlab::econ

#include <algorithm>
#include <map>

namespace shroudlab::econ {

template <class Key>
FixedEffect FixedEffect::from_keys(std::string name, const std::vector<Key>& keys) {
    std::map<Key, std::uint32_t> level;
    for (const auto& k : keys) level.emplace(k, 0);
    std::uint32_t next = 0;
    for (auto& [k, code] : level) code = next++;
    FixedEffect fe;
    fe.name = std::move(name);
    fe.n_levels = next;
    fe.codes.reserve(keys.size());
    for (const auto& k : keys) fe.codes.push_back(level.at(k));
    return fe;
}

}  // namespace shroudlab::econ
