// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

#include "shroudlab/datagen.hpp"
#include "shroudlab/econometrics.hpp"
#include "shroudlab/game.hpp"
#include "shroudlab/theory.hpp"

namespace shroudlab::io {

using Json = nlohmann::ordered_json;

/// Reads and parses a JSON file. Parse errors become SchemaError with the
/// line number.
Json load_json(const std::string& path);
Json parse_json(std::string_view text);
/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);
void write_text(const std::string& path, std::string_view text);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);

// Configs. Absent keys keep their defaults (the DGP default is the
// ten-treated / twenty-control panel); unknown keys are rejected.
Json to_json(const datagen::DGPConfig& c);
datagen::DGPConfig dgp_config_from_json(const Json& j);
Json to_json(const game::MarketConfig& c);
game::MarketConfig market_config_from_json(const Json& j, game::MarketConfig base = {});

/// "segmented", "equilibrium", "all_unshroud" (posted m + t),
/// "all_shroud" (posted m) or an explicit array of
/// {"posted_price": p, "shroud": bool}.
game::StrategyProfile profile_from_json(const Json& j, const game::MarketConfig& config);
Json to_json(const game::StrategyProfile& p, double tax);

/// Number, or the string "inf".
theory::Elasticity elasticity_from_json(const Json& j);

Json to_json(const game::EquilibriumReport& r, double tax);
Json to_json(const game::TaxSweep& s);
Json to_json(const theory::CompetitivePassThrough& r);
Json to_json(const theory::MonopolyPassThrough& r);
Json to_json(const theory::SalienceIncidence& r);
Json to_json(const theory::SinTax& r);

Json to_json(const econ::RegressionFit& fit, const econ::RegressionSpec& spec);

}  // namespace shroudlab::io
