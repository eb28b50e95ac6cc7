#pragma once

#include <stdexcept>
#include <string>

namespace dfock {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative factorial
/// argument, |eta| >= 1, zero mean photon number, non-finite matrix entries).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A result that cannot be represented in double precision.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed request: unknown operator label, cutoff mismatch, bad sweep spec.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A state could not be normalized (C_0 zero, negative or non-finite).
class NormalizationError : public Error {
public:
    using Error::Error;
};

} // namespace dfock
