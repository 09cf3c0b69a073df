#pragma once

#include <stdexcept>
#include <string>

namespace cbitcl {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Argument outside the effective domain of a mechanism or exponent.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// A stated precondition does not hold for the supplied model.
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& msg) : Error(msg) {}
};

/// The derivative of the branching mechanism is not finite at the domain endpoint.
class EndpointDerivativeUnavailable : public Error {
public:
    explicit EndpointDerivativeUnavailable(const std::string& msg) : Error(msg) {}
};

/// Adaptive ODE step size underflowed.
class NonconvergenceError : public Error {
public:
    explicit NonconvergenceError(const std::string& msg) : Error(msg) {}
};

/// Adaptive quadrature failed to reach the requested tolerance.
class QuadratureError : public Error {
public:
    explicit QuadratureError(const std::string& msg) : Error(msg) {}
};

/// Requested horizon is at or past the explosion time of the exponential moment.
class LifetimeExceeded : public Error {
public:
    explicit LifetimeExceeded(const std::string& msg) : Error(msg) {}
};

/// Asymptotic argument lies outside the set where the long-run limit exists.
class NotInX : public Error {
public:
    explicit NotInX(const std::string& msg) : Error(msg) {}
};

/// Exponential tilt would leave the supported parametric jump families.
class FamilyClosureError : public Error {
public:
    explicit FamilyClosureError(const std::string& msg) : Error(msg) {}
};

/// Invalid simulation or CLI configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Random stream exhausted or misused.
class RNGError : public Error {
public:
    explicit RNGError(const std::string& msg) : Error(msg) {}
};

/// Price outside the open no-arbitrage bounds; implied volatility undefined.
class OutOfBounds : public Error {
public:
    explicit OutOfBounds(const std::string& msg) : Error(msg) {}
};

} // namespace cbitcl
