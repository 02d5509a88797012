#pragma once

#include <stdexcept>
#include <string>

namespace fsmooth {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration or violated precondition. The message carries the
// offending field path when one exists. Maps to CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite state, degenerate normalisation, failed validation. Messages are
// prefixed with the module that raised them. Maps to CLI exit code 3.
class NumericalError : public Error {
public:
    NumericalError(const std::string& module, const std::string& what)
        : Error(module + ": " + what) {}
};

// Request that the chosen backend cannot serve (e.g. quadrature for d > 2).
class Unsupported : public ConfigError {
public:
    using ConfigError::ConfigError;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

}  // namespace fsmooth
