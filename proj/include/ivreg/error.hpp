#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivreg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, schema problems, invalid arguments.
/// The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

class SchemaMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class VersionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerical failure during fitting. The CLI maps these to exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularDesign : public NumericalError {
public:
    SingularDesign(std::size_t pivot, const std::string& what)
        : NumericalError(what), pivot_(pivot) {}

    /// Zero-based predictor column whose pivot collapsed.
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class NonFiniteEncountered : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Response without variance: no lambda grid can be built.
class ZeroVariance : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace ivreg
