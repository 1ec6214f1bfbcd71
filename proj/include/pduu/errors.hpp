#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pduu {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Requested work exceeds a configured size budget (e.g. mesh node count).
class ResourceError : public Error {
public:
    using Error::Error;
};

class CoefficientRangeError : public Error {
public:
    using Error::Error;
};

/// Linear solve failed; carries the relative residual that was reached.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Porosity left the admissible open interval at some vertex.
class PorosityRangeError : public Error {
public:
    PorosityRangeError(const std::string& what, std::size_t node, double value)
        : Error(what), node_(node), value_(value) {}
    std::size_t node() const noexcept { return node_; }
    double value() const noexcept { return value_; }

private:
    std::size_t node_;
    double value_;
};

/// Mechanical system has no Dirichlet support.
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// A cached evaluation was used with a design it was not computed for.
class StalenessError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string key)
        : Error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class OptimizerError : public Error {
public:
    using Error::Error;
};

}  // namespace pduu
