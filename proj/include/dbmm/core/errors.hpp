#pragma once

#include <stdexcept>
#include <string>

namespace dbmm {

// Base class for everything this library throws on purpose. Callers that
// want a single catch site can catch dbmm::Error; the subclasses exist so
// the CLI can map failures to distinct exit codes and so tests can assert
// on the precise failure mode.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A belief (or other distribution) lost all its mass: normalization would
// divide by ~zero. Raised by normalize() and the exact filters.
class DegenerateBelief : public Error {
public:
    explicit DegenerateBelief(const std::string& msg) : Error(msg) {}
};

// An operation received an empty container where at least one element is
// required (empty batch, empty trial list, empty metric input...).
class EmptyInput : public Error {
public:
    explicit EmptyInput(const std::string& msg) : Error(msg) {}
};

// Out-of-range state/action/observation index.
class IndexError : public Error {
public:
    explicit IndexError(const std::string& msg) : Error(msg) {}
};

// Mismatched vector/matrix dimensions between caller and callee.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// A backward pass was asked to run against a stale forward tape (the net's
// parameters changed since the tape was recorded).
class TapeError : public Error {
public:
    explicit TapeError(const std::string& msg) : Error(msg) {}
};

// NaN or Inf showed up in a gradient.
class NonFiniteGradient : public Error {
public:
    explicit NonFiniteGradient(const std::string& msg) : Error(msg) {}
};

// NaN or Inf showed up in a loss value.
class NonFiniteLoss : public Error {
public:
    explicit NonFiniteLoss(const std::string& msg) : Error(msg) {}
};

// A run configuration failed validation. `where` carries the JSON-path-ish
// location of the offending field so the CLI message points at it.
class ConfigError : public Error {
public:
    ConfigError(const std::string& where, const std::string& msg)
        : Error(where + ": " + msg), where_(where) {}
    explicit ConfigError(const std::string& msg) : Error(msg) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

// Not enough data to do the thing (e.g. a trial shorter than required).
class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

// An evaluation run died partway through (I/O failure, invalid state...).
class RunAborted : public Error {
public:
    explicit RunAborted(const std::string& msg) : Error(msg) {}
};

} // namespace dbmm
