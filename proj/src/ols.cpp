// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <string>

#include "shroudlab/econometrics.hpp"
#include "shroudlab/error.hpp"

namespace shroudlab::econ {

namespace {

constexpr Eigen::Index kChunkRows = 8192;
constexpr double kRankTol = 1e-7;

// R factor of [A | b] accumulated over row blocks; never forms A'A.
Matrix blocked_r(const Matrix& A, const Vector* b) {
    const Eigen::Index k = A.cols() + (b ? 1 : 0);
    const Eigen::Index n = A.rows();
    Matrix r = Matrix::Zero(k, k);
    Matrix stack;
    for (Eigen::Index start = 0; start < n; start += kChunkRows) {
        const Eigen::Index rows = std::min(kChunkRows, n - start);
        stack.resize(k + rows, k);
        stack.topRows(k) = r;
        stack.block(k, 0, rows, A.cols()) = A.middleRows(start, rows);
        if (b) stack.block(k, A.cols(), rows, 1) = b->segment(start, rows);
        Eigen::HouseholderQR<Eigen::Ref<Matrix>> qr(stack);
        r = stack.topRows(k).triangularView<Eigen::Upper>();
    }
    return r;
}

}  // namespace

OlsResult ols(const Matrix& X, const Vector& y, const std::vector<std::string>& names,
              std::span<const double> reference_norms) {
    const Eigen::Index n = X.rows();
    const Eigen::Index k = X.cols();
    if (y.size() != n) throw ValidationError("response length does not match design rows");
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != k) {
        throw ValidationError("column names do not match design columns");
    }
    if (!reference_norms.empty() && static_cast<Eigen::Index>(reference_norms.size()) != k) {
        throw ValidationError("reference norms do not match design columns");
    }
    if (k == 0) throw ValidationError("design has no regressors");
    if (n <= k) {
        throw ValidationError("need more observations than regressors (" + std::to_string(n) + " <= " +
                              std::to_string(k) + ")");
    }
    if (!X.allFinite() || !y.allFinite()) throw NumericalError("design or response contains non-finite values");

    const Matrix rk = blocked_r(X, &y);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double ref = reference_norms.empty() ? X.col(j).norm() : reference_norms[static_cast<std::size_t>(j)];
        if (!(std::abs(rk(j, j)) > kRankTol * ref) || ref == 0.0) {
            const std::string name = names.empty() ? "x" + std::to_string(j) : names[static_cast<std::size_t>(j)];
            throw NumericalError("regressor '" + name + "' is collinear with the fixed effects or other regressors");
        }
    }

    OlsResult out;
    out.r_factor = rk.topLeftCorner(k, k);
    out.beta = out.r_factor.triangularView<Eigen::Upper>().solve(rk.col(k).head(k));
    out.residuals = y - X * out.beta;
    return out;
}

double cluster_correction(std::size_t n_clusters, const DofSpec& dof) {
    if (n_clusters < 2) throw ValidationError("cluster-robust errors need at least 2 clusters");
    const double resid_dof = static_cast<double>(dof.n_obs) - static_cast<double>(dof.n_regressors) -
                             static_cast<double>(dof.n_absorbed);
    if (resid_dof <= 0.0) throw ValidationError("no residual degrees of freedom left");
    const double g = static_cast<double>(n_clusters);
    return g / (g - 1.0) * (static_cast<double>(dof.n_obs) - 1.0) / resid_dof;
}

Matrix cluster_covariance(const Matrix& r_factor, const Matrix& X, const Vector& residuals,
                          const ClusterIndex& clusters, const DofSpec& dof) {
    const Eigen::Index k = X.cols();
    if (static_cast<Eigen::Index>(clusters.codes.size()) != X.rows() || residuals.size() != X.rows()) {
        throw ValidationError("cluster codes and residuals must match design rows");
    }
    Matrix scores = Matrix::Zero(clusters.n_clusters, k);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto g = clusters.codes[static_cast<std::size_t>(i)];
        if (g >= clusters.n_clusters) throw ValidationError("cluster code out of range");
        scores.row(g).noalias() += residuals[i] * X.row(i);
    }
    // (X'X)^-1 = R^-1 R^-T
    const Matrix r_inv = r_factor.triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
    const Matrix bread = r_inv * r_inv.transpose();
    const Matrix meat = scores.transpose() * scores;
    Matrix v = cluster_correction(clusters.n_clusters, dof) * bread * meat * bread;
    return 0.5 * (v + v.transpose());
}

Matrix cluster_covariance(const Matrix& X, const Vector& residuals, const ClusterIndex& clusters,
                          const DofSpec& dof) {
    const Matrix r = blocked_r(X, nullptr);
    return cluster_covariance(r, X, residuals, clusters, dof);
}

}  // namespace shroudlab::econ
