// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace shroudlab::cli {

/// Entry point of the `shroudlab` tool. Exit codes: 0 success, 1 invalid
/// input, 2 numerical or runtime failure. On failure `err` receives exactly
/// one line of JSON: {"error": kind, "message": text}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shroudlab::cli
