#pragma once

#include <stdexcept>
#include <string>

namespace tiam {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are not conformable.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A clip request with lo > hi at some entry.
class InfeasibleBoundsError : public Error {
public:
    InfeasibleBoundsError(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// The relaxed activation constraint has an empty interval at some entry.
class FeasibilityError : public Error {
public:
    FeasibilityError(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Malformed user input (labels, one-hot targets, data files).
class InputError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity appeared where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Backtracking ran out of doublings without satisfying its condition.
class BacktrackError : public Error {
public:
    BacktrackError(const std::string& what, double last_gap)
        : Error(what), last_gap_(last_gap) {}
    double last_gap() const noexcept { return last_gap_; }

private:
    double last_gap_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tiam
