// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace suredip {

// Shape/dimension contract violations (mismatched extents, bad ranks).
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Operation called in the wrong order (e.g. backward on a stale graph).
class StateError : public std::logic_error {
public:
    explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

// Iterative solver failed to reach its residual contract.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double residual, int iterations)
        : std::runtime_error(msg), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

// Config file parse/validation failure; carries the offending field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, std::string field = "")
        : std::runtime_error(msg), field(std::move(field)) {}
    std::string field;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace suredip
