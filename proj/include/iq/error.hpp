#pragma once

#include <stdexcept>
#include <string>

namespace iq {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidOrderError : public Error {
public:
    using Error::Error;
};

class UnsupportedRuleError : public Error {
public:
    using Error::Error;
};

class GridTooLargeError : public Error {
public:
    using Error::Error;
};

/// Covariance factorization failed; carries the 1-based leading minor that broke.
class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, int minor) : Error(what), minor_(minor) {}
    int minor() const noexcept { return minor_; }

private:
    int minor_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Every importance weight vanished (the proposal missed all target mass).
class DegenerateWeightsError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace iq
