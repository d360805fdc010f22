// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "shroudlab/error.hpp"
#include "shroudlab/rng.hpp"
#include "shroudlab/theory.hpp"

using namespace shroudlab;
using namespace shroudlab::theory;

TEST_CASE("competitive pass-through") {
    ElasticityInputs in;
    in.eta_demand = 2.0;
    in.eta_supply = 2.0;
    CHECK(passthrough_competitive(in).rho == doctest::Approx(0.5));
    in.eta_supply = Elasticity::infinite();
    CHECK(passthrough_competitive(in).rho == 1.0);
    in.eta_demand = Elasticity::infinite();
    CHECK_THROWS_AS(passthrough_competitive(in), ValidationError);
    in.eta_supply = 3.0;
    CHECK(passthrough_competitive(in).rho == 0.0);
}

TEST_CASE("monopoly pass-through and over-shifting") {
    ElasticityInputs in;
    in.eta_demand = 2.0;
    in.eta_supply = Elasticity::infinite();
    in.eta_ms = 1.0;
    auto r = passthrough_monopoly(in);
    CHECK(r.rho == doctest::Approx(0.5));
    CHECK_FALSE(r.over_shifting);

    in.eta_ms = -2.0;
    r = passthrough_monopoly(in);
    CHECK(r.rho == doctest::Approx(2.0));
    CHECK(r.over_shifting);

    in.eta_ms = -1.0;  // denominator 0
    CHECK_THROWS_AS(passthrough_monopoly(in), NumericalError);
    in.eta_ms = -0.5;  // denominator -1
    CHECK_THROWS_AS(passthrough_monopoly(in), NumericalError);

    // Finite supply: (eta_D - 1)/eta_S enters the denominator.
    in.eta_demand = 3.0;
    in.eta_supply = 4.0;
    in.eta_ms = 2.0;
    r = passthrough_monopoly(in);
    CHECK(r.supply_term == doctest::Approx(0.5));
    CHECK(r.rho == doctest::Approx(1.0 / 2.0));
}

TEST_CASE("salience incidence limits") {
    ElasticityInputs in;
    in.eta_demand = 1.5;
    in.eta_supply = 0.7;
    in.consumer_price = 1.2;
    in.producer_price = 1.0;
    in.salience = 0.0;
    const auto r0 = incidence_salience(in);
    CHECK(r0.dp_dt == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r0.dq_dt == 0.0);

    in.salience = 1.0;
    in.consumer_price = in.producer_price = 1.0;
    CHECK(std::abs(incidence_salience(in).dp_dt - passthrough_competitive(in).rho) <= 1e-12);
    CHECK_THROWS_AS(incidence_salience({1.0, 1.0, 1.0, -0.5, 1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(incidence_salience({1.0, 1.0, 1.0, 0.5, 0.0, 1.0}), ValidationError);
}

TEST_CASE("salience incidence against a solved linear market") {
    // D(y) = a - b y at perceived price y = q + psi t, S(q) = c + d q.
    // Equilibrium q(t) = (a - c - b psi t) / (b + d); differentiate numerically.
    CounterRng rng(5, {1});
    for (int i = 0; i < 200; ++i) {
        const double a = 20 + 10 * rng.uniform();
        const double b = 0.5 + 2 * rng.uniform();
        const double c = 1 + rng.uniform();
        const double d = 0.5 + 2 * rng.uniform();
        const double psi = rng.uniform();
        const double t = 0.3 * rng.uniform();
        const auto q_of = [&](double tt) { return (a - c - b * psi * tt) / (b + d); };
        const double q = q_of(t);
        const double p = q + t;
        const double x = c + d * q;
        const double h = 1e-6;
        const double dq_num = (q_of(t + h) - q_of(t - h)) / (2 * h);

        ElasticityInputs in;
        in.eta_demand = b * p / x;
        in.eta_supply = d * q / x;
        in.consumer_price = p;
        in.producer_price = q;
        in.salience = psi;
        const auto r = incidence_salience(in);
        CHECK(r.dq_dt == doctest::Approx(dq_num).epsilon(1e-7));
        CHECK(r.dp_dt == doctest::Approx(1.0 + dq_num).epsilon(1e-7));
    }
}

TEST_CASE("optimal sin tax") {
    const auto r = optimal_sin_tax({0.5, 0.5, 2.0});
    CHECK(r.pigouvian == doctest::Approx(1.0));
    CHECK(r.t_star == doctest::Approx(2.0));
    CHECK(r.dollar_multiplier == doctest::Approx(2.0));
    CHECK(optimal_sin_tax({1.0, 0.3, 2.0}).t_star == 0.0);
    CHECK_THROWS_AS(optimal_sin_tax({0.5, 0.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(optimal_sin_tax({1.5, 1.0, 2.0}), ValidationError);
}

TEST_CASE("property: over-shifting iff negative curvature when the supply term vanishes") {
    CounterRng rng(99, {3});
    int evaluated = 0;
    for (int i = 0; i < 3000; ++i) {
        ElasticityInputs in;
        in.eta_demand = 1.0 + 4.0 * rng.uniform();
        in.eta_supply = Elasticity::infinite();
        in.eta_ms = -10.0 + 20.0 * rng.uniform();
        const double denom = 1.0 + 1.0 / in.eta_ms.value();
        if (denom <= 1e-12) {
            CHECK_THROWS_AS(passthrough_monopoly(in), NumericalError);
            continue;
        }
        const auto r = passthrough_monopoly(in);
        CHECK((r.rho > 1.0) == (in.eta_ms.value() < 0.0));
        ++evaluated;
    }
    CHECK(evaluated > 1000);
}

TEST_CASE("elasticity sentinel") {
    constexpr Elasticity e = Elasticity::infinite();
    static_assert(e.is_infinite());
    CHECK(e.reciprocal() == 0.0);
    CHECK(Elasticity(INFINITY).is_infinite());
    CHECK(Elasticity(4.0).reciprocal() == 0.25);
}
