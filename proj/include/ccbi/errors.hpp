#pragma once

#include <stdexcept>
#include <string>

namespace ccbi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: a violated precondition or malformed configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The density closure denominator phi^-2 - rho^2 T_f came too close to zero.
class SingularDenominatorError : public Error {
public:
    using Error::Error;
};

class NonFiniteStateError : public Error {
public:
    using Error::Error;
};

/// A pore footprint was too narrow for the interface grid.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

/// cRW was started outside the feasible set.
class InfeasibleStartError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ValidationError(message);
    }
}

} // namespace detail
} // namespace ccbi
