#pragma once

#include <stdexcept>
#include <string>

namespace ergodiff {

/// Invalid configuration or malformed input file.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: divergence, singular system, scheme validity refusal,
/// state blow-up.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A documented precondition was broken by the caller.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

} // namespace ergodiff
