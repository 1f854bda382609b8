#pragma once

#include <stdexcept>
#include <string>

namespace fewgan {

// Error taxonomy; the CLI maps each kind to a distinct exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible array shapes (matmul inner dim, elementwise mismatch, ...).
struct DimensionError : Error {
    using Error::Error;
};

// Caller handed in data that violates an operation's preconditions
// (non-binary labels, empty batch, empty mode mask, n < 2, ...).
struct InputError : Error {
    using Error::Error;
};

// API contract violated (non-scalar backward root, layout mismatch, h = 0).
struct ContractError : Error {
    using Error::Error;
};

// Training produced a non-finite loss or gradient.
struct DivergenceError : Error {
    using Error::Error;
};

// Numerical routine left its valid domain (non-PSD covariance beyond tolerance).
struct NumericError : Error {
    using Error::Error;
};

// A required input artifact (checkpoint, fisher file) is missing.
struct DependencyError : Error {
    using Error::Error;
};

}  // namespace fewgan
