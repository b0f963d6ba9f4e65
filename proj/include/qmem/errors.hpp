#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmem {

/// Argument outside an operation's documented domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A calibration whose constraints admit no (unique) positive solution.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoRootError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Photon-number distribution whose tail beyond n_max is not negligible.
class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Division by a vanishing count or probability in a g2 estimate.
class ZeroDivisionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Data that cannot determine the model parameters (e.g. constant samples).
class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsortedInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Configuration value violating an invariant; names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace qmem
