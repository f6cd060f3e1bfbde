#pragma once

#include <stdexcept>
#include <string>

namespace caplab {

/// Invalid user input: malformed configuration, violated preconditions on
/// sizes, steps and grids.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A quantity is undefined for the given parameters (e.g. a stochastic
/// threshold requested with zero noise intensity).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The numerics broke down: non-finite state, step size too large.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace caplab
