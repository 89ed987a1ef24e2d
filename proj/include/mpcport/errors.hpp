#pragma once

#include <stdexcept>
#include <string>

namespace mpcport {

/// Bad or inconsistent configuration (parameter ranges, manifest contents).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or unusable input data (CSV files, price series).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Quadratic-program failure: infeasible constraints, non-SPD Hessian,
/// or iteration cap exceeded.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mpcport
