#pragma once

#include <stdexcept>
#include <string>

namespace kerodeepc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Cholesky or SVD could not be computed.
class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, double min_eigenvalue)
        : Error(what), min_eigenvalue_(min_eigenvalue) {}

    /// Estimate of the smallest eigenvalue of the offending matrix.
    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

/// A simulated trajectory left the finite region.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or data file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Precondition violated by a caller-supplied value.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace kerodeepc
