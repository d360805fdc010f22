// SPDX-License-Identifier: Apache-2.0
#include "shroudlab/theory.hpp"

#include <cmath>
#include <string>

#include "shroudlab/error.hpp"

namespace shroudlab::theory {

namespace {

constexpr double kSingularTol = 1e-12;

void require_positive(const Elasticity& e, const char* name) {
    if (!e.is_infinite() && !(e.value() > 0.0)) {
        throw ValidationError(std::string(name) + " must be positive or infinite, got " +
                              std::to_string(e.value()));
    }
}

}  // namespace

CompetitivePassThrough passthrough_competitive(const ElasticityInputs& in) {
    require_positive(in.eta_demand, "eta_demand");
    require_positive(in.eta_supply, "eta_supply");
    const bool d_inf = in.eta_demand.is_infinite();
    const bool s_inf = in.eta_supply.is_infinite();
    if (d_inf && s_inf) {
        throw ValidationError("pass-through undefined when both elasticities are infinite");
    }
    if (s_inf) return {1.0, 0.0};
    if (d_inf) return {0.0, std::numeric_limits<double>::infinity()};
    const double ratio = in.eta_demand.value() / in.eta_supply.value();
    return {1.0 / (1.0 + ratio), ratio};
}

MonopolyPassThrough passthrough_monopoly(const ElasticityInputs& in) {
    require_positive(in.eta_demand, "eta_demand");
    require_positive(in.eta_supply, "eta_supply");
    if (in.eta_demand.is_infinite()) {
        throw ValidationError("monopoly pass-through needs a finite demand elasticity");
    }
    if (!in.eta_ms.is_infinite() && in.eta_ms.value() == 0.0) {
        throw ValidationError("eta_ms must be non-zero");
    }
    MonopolyPassThrough r{};
    r.supply_term = (in.eta_demand.value() - 1.0) * in.eta_supply.reciprocal();
    r.curvature_term = in.eta_ms.reciprocal();
    r.denominator = 1.0 + r.supply_term + r.curvature_term;
    if (!(r.denominator > kSingularTol)) {
        throw NumericalError("singular monopoly configuration: denominator " +
                             std::to_string(r.denominator) + " is not positive");
    }
    r.rho = 1.0 / r.denominator;
    r.over_shifting = r.rho > 1.0;
    return r;
}

SalienceIncidence incidence_salience(const ElasticityInputs& in) {
    require_positive(in.eta_demand, "eta_demand");
    require_positive(in.eta_supply, "eta_supply");
    if (!(in.consumer_price > 0.0) || !(in.producer_price > 0.0)) {
        throw ValidationError("prices must be positive");
    }
    if (!(in.salience >= 0.0)) throw ValidationError("salience must be non-negative");
    const double psi = in.salience;
    SalienceIncidence r{};
    r.price_ratio = in.consumer_price / in.producer_price;
    const bool d_inf = in.eta_demand.is_infinite();
    const bool s_inf = in.eta_supply.is_infinite();
    if (d_inf && s_inf) {
        throw ValidationError("incidence undefined when both elasticities are infinite");
    }
    if (s_inf) {
        r.denominator = std::numeric_limits<double>::infinity();
        r.dq_dt = 0.0;
        r.dp_dt = 1.0;
        return r;
    }
    if (d_inf) {
        r.denominator = std::numeric_limits<double>::infinity();
        r.dq_dt = -psi;
        r.dp_dt = 1.0 - psi;
        return r;
    }
    const double supply = r.price_ratio * in.eta_supply.value();
    const double demand = in.eta_demand.value();
    r.denominator = supply + demand;
    r.dq_dt = -psi * demand / r.denominator;
    r.dp_dt = (supply + (1.0 - psi) * demand) / r.denominator;
    return r;
}

SinTax optimal_sin_tax(const SinTaxInputs& in) {
    if (!(in.gamma >= 0.0 && in.gamma <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
    if (!(in.marginal_harm >= 0.0)) throw ValidationError("marginal_harm must be non-negative");
    if (in.attention == 0.0) {
        throw ValidationError("corrective taxation ineffective: attention is zero");
    }
    if (!(in.attention > 0.0)) throw ValidationError("attention must be positive");
    SinTax r{};
    r.pigouvian = (1.0 - in.gamma) * in.marginal_harm;
    r.t_star = r.pigouvian / in.attention;
    r.dollar_multiplier = 1.0 / in.attention;
    return r;
}

}  // namespace shroudlab::theory
