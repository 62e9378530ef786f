#pragma once

#include <stdexcept>
#include <string>

namespace gradmrf {

/// Shape or offset incompatibility between operands.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A precision operator left the positive-definite cone.
class NotPositiveDefiniteError : public std::runtime_error {
public:
    explicit NotPositiveDefiniteError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Stencil offsets wrap onto each other for the requested grid shape.
class AmbiguityError : public std::invalid_argument {
public:
    explicit AmbiguityError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Sine phase requested at a self-conjugate frequency bin.
class UndefinedPhaseError : public std::invalid_argument {
public:
    explicit UndefinedPhaseError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Linear-algebra factorization failed beyond recovery.
class NumericalConditioningError : public std::runtime_error {
public:
    NumericalConditioningError(const std::string& msg, double condition_estimate)
        : std::runtime_error(msg), condition_estimate(condition_estimate) {}
    double condition_estimate;
};

/// Malformed file, config, or CLI input.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gradmrf
