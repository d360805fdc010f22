// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace shroudlab {

/// Bad input: malformed quote, invalid config, failed precondition.
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure on otherwise valid input (singular system, rank
/// deficiency, non-convergence). The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV or JSON schema violation; carries the 1-based line when known.
class SchemaError : public ValidationError {
public:
    SchemaError(const std::string& what, long line = 0)
        : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace shroudlab
