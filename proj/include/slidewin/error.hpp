#pragma once

#include <stdexcept>
#include <string>

namespace slidewin {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid model data (bad shapes, non-stochastic rows, NaN).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment configuration. `key` names the offending config entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// An iterative solver hit its iteration budget before reaching tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, long iterations)
        : Error(what + " (residual " + std::to_string(residual) + " after " +
                std::to_string(iterations) + " iterations)"),
          residual_(residual), iterations_(iterations) {}
    double residual() const noexcept { return residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

/// Enumeration would exceed the configured state/sequence cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

} // namespace slidewin
