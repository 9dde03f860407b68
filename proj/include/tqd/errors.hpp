#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tqd {

// A value or argument outside its documented domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input data. Line numbers are 1-based; 0 means "not line specific".
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Configuration that is well-formed but lies outside what a model defines,
// e.g. overlapping signal windows for the final-capacity oracle.
class ModelViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tqd
