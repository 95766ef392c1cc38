#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mspgm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimension, non-positive step, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Euler-Maruyama produced a non-finite state.
class NonFiniteState : public Error {
public:
    NonFiniteState(std::size_t step, std::size_t path);

    std::size_t step() const noexcept { return step_; }
    std::size_t path() const noexcept { return path_; }

private:
    std::size_t step_;
    std::size_t path_;
};

/// The Riccati solution escaped to infinity before reaching t = 0.
class RiccatiBlowUp : public Error {
public:
    explicit RiccatiBlowUp(double time);

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Resource-allocation chain or feasibility violation. `index` is 1-based.
class PlanError : public Error {
public:
    PlanError(std::size_t index, const std::string& what);

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Configuration file problem. Parse errors carry a line number (0 when not applicable);
/// semantic errors carry the dotted field path, e.g. "stage2.paths".
class ConfigError : public Error {
public:
    ConfigError(std::string field, std::size_t line, const std::string& what);

    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string field_;
    std::size_t line_;
};

}  // namespace mspgm
