// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>

namespace shroudlab::theory {

/// An elasticity that may be exactly infinite. Infinity is a flag rather
/// than a large float so limit cases (perfectly elastic supply) are exact.
class Elasticity {
public:
    constexpr Elasticity() = default;
    constexpr Elasticity(double value)  // NOLINT: implicit by intent
        : value_(value), infinite_(value == std::numeric_limits<double>::infinity()) {}

    static constexpr Elasticity infinite() {
        Elasticity e;
        e.infinite_ = true;
        e.value_ = std::numeric_limits<double>::infinity();
        return e;
    }

    constexpr bool is_infinite() const noexcept { return infinite_; }
    constexpr double value() const noexcept { return value_; }
    /// 1/eta, exactly zero for the infinite sentinel.
    constexpr double reciprocal() const noexcept { return infinite_ ? 0.0 : 1.0 / value_; }

private:
    double value_ = 1.0;
    bool infinite_ = false;
};

struct ElasticityInputs {
    Elasticity eta_demand = 1.0;
    Elasticity eta_supply = Elasticity::infinite();
    /// Elasticity of the inverse marginal surplus; may be negative.
    Elasticity eta_ms = 1.0;
    /// Share of the surcharge consumers perceive.
    double salience = 1.0;
    double consumer_price = 1.0;
    double producer_price = 1.0;
};

struct SinTaxInputs {
    double gamma = 1.0;
    double attention = 1.0;
    double marginal_harm = 0.0;
};

struct CompetitivePassThrough {
    double rho;
    double demand_supply_ratio;  // eta_D / eta_S
};

struct MonopolyPassThrough {
    double rho;
    double supply_term;     // (eta_D - 1) / eta_S
    double curvature_term;  // 1 / eta_ms
    double denominator;
    bool over_shifting;  // rho > 1
};

struct SalienceIncidence {
    double dq_dt;
    double dp_dt;
    double price_ratio;  // p / q
    double denominator;  // (p/q) eta_S + eta_D, or inf when a side is perfectly elastic
};

struct SinTax {
    double t_star;
    double pigouvian;          // (1 - gamma) c_x, the full-attention level
    double dollar_multiplier;  // 1 / attention
};

/// rho = 1 / (1 + eta_D / eta_S).
CompetitivePassThrough passthrough_competitive(const ElasticityInputs& in);

/// rho = 1 / (1 + (eta_D - 1)/eta_S + 1/eta_ms). Throws NumericalError when
/// the denominator is non-positive or within 1e-12 of zero.
MonopolyPassThrough passthrough_monopoly(const ElasticityInputs& in);

/// Incidence when consumers perceive only a share psi of a surcharge equal
/// to the tax.
SalienceIncidence incidence_salience(const ElasticityInputs& in);

/// t* = (1 - gamma) c_x(x*) / attention. Zero attention throws
/// ValidationError: the tax cannot correct behaviour at all.
SinTax optimal_sin_tax(const SinTaxInputs& in);

}  // namespace shroudlab::theory
