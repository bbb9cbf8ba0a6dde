#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

// Error taxonomy. The command line driver maps these onto exit codes:
// ConfigError -> 2, ConvergenceError -> 3, NumericalError -> 4.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested work exceeds a stated budget (e.g. path enumeration count).
struct BudgetError : ConfigError {
    using ConfigError::ConfigError;
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, double residual_ = 0.0, int iterations_ = 0)
        : std::runtime_error(what), residual(residual_), iterations(iterations_) {}
    double residual;
    int iterations;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Array shape disagrees with the grid or with a declared dimension.
struct ShapeError : NumericalError {
    using NumericalError::NumericalError;
};

// Input outside the mathematical domain (K <= 0, negative mass, ...).
struct DomainError : NumericalError {
    using NumericalError::NumericalError;
};

// A policy pushes state through a constrained boundary.
struct ConstraintError : NumericalError {
    using NumericalError::NumericalError;
};

// Stationary distribution is not unique (reducible chain).
struct NonUniquenessError : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace mfg
