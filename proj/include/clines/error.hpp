#pragma once

#include <stdexcept>
#include <string>

namespace clines {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data (malformed profile, arity mismatch, bad parameters).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A position outside the habitat interval was passed to an evaluator.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator could not complete (step underflow, non-finite state).
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double position)
        : Error(what), position_(position) {}
    double position() const noexcept { return position_; }

private:
    double position_;
};

}  // namespace clines
