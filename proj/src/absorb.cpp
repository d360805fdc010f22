// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>
#include <string>

#include "shroudlab/econometrics.hpp"
#include "shroudlab/error.hpp"

namespace shroudlab::econ {

namespace {

struct Dimension {
    const FixedEffect* fe;
    std::vector<double> inv_count;
};

// Subtracts level means of one dimension from x; returns the largest shift.
double demean(double* x, std::size_t n, const Dimension& dim, std::vector<double>& sums) {
    const auto* codes = dim.fe->codes.data();
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) sums[codes[i]] += x[i];
    double shift = 0.0;
    for (std::size_t l = 0; l < sums.size(); ++l) {
        sums[l] *= dim.inv_count[l];
        shift = std::max(shift, std::abs(sums[l]));
    }
    for (std::size_t i = 0; i < n; ++i) x[i] -= sums[codes[i]];
    return shift;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

AbsorbDiagnostics absorb_fixed_effects(Matrix& data, const std::vector<FixedEffect>& fes,
                                       const AbsorbOptions& options) {
    AbsorbDiagnostics diag;
    diag.converged = true;
    if (fes.empty()) return diag;
    if (!(options.tol > 0.0)) throw ValidationError("absorb tolerance must be positive");
    if (options.max_iter < 1) throw ValidationError("absorb max_iter must be at least 1");

    const auto n = static_cast<std::size_t>(data.rows());
    std::vector<Dimension> dims;
    std::size_t max_levels = 0;
    for (const auto& fe : fes) {
        if (fe.codes.size() != n) {
            throw ValidationError("fixed effect '" + fe.name + "' has " + std::to_string(fe.codes.size()) +
                                  " codes for " + std::to_string(n) + " rows");
        }
        Dimension d{&fe, std::vector<double>(fe.n_levels, 0.0)};
        for (auto c : fe.codes) {
            if (c >= fe.n_levels) throw ValidationError("fixed effect '" + fe.name + "' code out of range");
            d.inv_count[c] += 1.0;
        }
        for (auto& v : d.inv_count) v = v > 0.0 ? 1.0 / v : 0.0;
        max_levels = std::max<std::size_t>(max_levels, fe.n_levels);
        dims.push_back(std::move(d));
    }

    std::vector<double> sums(max_levels);
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        double* x = data.col(j).data();
        int iter = 0;
        double change = 0.0;
        if (dims.size() == 1) {
            sums.resize(dims[0].fe->n_levels);
            change = demean(x, n, dims[0], sums);
            iter = 1;
        } else {
            for (;;) {
                ++iter;
                change = 0.0;
                for (const auto& d : dims) {
                    sums.resize(d.fe->n_levels);
                    change = std::max(change, demean(x, n, d, sums));
                }
                if (change <= options.tol) break;
                if (iter >= options.max_iter) {
                    throw NumericalError("fixed-effect absorption did not converge in " +
                                         std::to_string(options.max_iter) + " sweeps (last change " +
                                         std::to_string(change) + ")");
                }
            }
        }
        if (iter > diag.iterations) diag.iterations = iter;
        diag.final_change = std::max(diag.final_change, dims.size() == 1 ? 0.0 : change);
    }
    return diag;
}

std::size_t absorbed_dof(const std::vector<FixedEffect>& fes) {
    if (fes.empty()) return 0;
    std::size_t total = fes[0].n_levels;
    if (fes.size() >= 2) {
        const auto& a = fes[0];
        const auto& b = fes[1];
        std::vector<std::size_t> parent(a.n_levels + b.n_levels);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        std::vector<char> seen(parent.size(), 0);
        for (std::size_t i = 0; i < a.codes.size(); ++i) {
            const std::size_t u = a.codes[i];
            const std::size_t v = a.n_levels + b.codes[i];
            seen[u] = seen[v] = 1;
            const auto ru = find_root(parent, u);
            const auto rv = find_root(parent, v);
            if (ru != rv) parent[ru] = rv;
        }
        std::size_t components = 0;
        for (std::size_t i = a.n_levels; i < parent.size(); ++i) {
            if (seen[i] && find_root(parent, i) == i) ++components;
        }
        // Roots may sit on the first dimension's side.
        for (std::size_t i = 0; i < a.n_levels; ++i) {
            if (seen[i] && find_root(parent, i) == i) ++components;
        }
        total += b.n_levels - components;
    }
    for (std::size_t d = 2; d < fes.size(); ++d) total += fes[d].n_levels - 1;
    return total;
}

}  // namespace shroudlab::econ
