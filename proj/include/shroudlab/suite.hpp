// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shroudlab/game.hpp"
#include "shroudlab/json_io.hpp"

namespace shroudlab::suite {

/// Parameter grids for the property checks. Every market in a sweep is the
/// base market with the swept fields replaced.
struct SuiteConfig {
    game::MarketConfig market;
    std::vector<int> n_firms{4, 5, 6, 7, 8, 9, 10};
    std::vector<double> attentive_share{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> attention{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> shroud_disutility{0.0, 0.01, 0.05};
    /// Homogeneous-attention closed loop.
    std::vector<double> loop_attention{0.25, 0.5, 1.0};
    std::vector<double> loop_gamma{0.25, 0.5, 0.75};
    int formula_sweep_points = 1000;
    std::uint64_t seed = 7;
    double deviation_tolerance = 1e-9;
    /// Optional extra profile checked on the base market.
    std::optional<io::Json> profile;

    void validate() const;
};

SuiteConfig suite_config_from_json(const io::Json& j);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::size_t cases = 0;
    io::Json witness;  // worst case found
};

struct SuiteReport {
    std::vector<CheckResult> checks;
    std::optional<io::Json> supplied_profile;
    bool all_passed() const;
    io::Json to_json() const;
};

SuiteReport run_theory_suite(const SuiteConfig& config);

}  // namespace shroudlab::suite
