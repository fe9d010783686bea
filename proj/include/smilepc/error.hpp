#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smilepc {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The classifier failed or returned an invalid output while processing `row`.
class ClassifierError : public Error {
public:
    ClassifierError(const std::string& what, std::size_t row)
        : Error("perturbation row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Every kernel weight underflowed; the kernel width is too small for the distances.
class DegenerateWeightsError : public Error {
public:
    using Error::Error;
};

/// A fidelity metric has no defined value for the given inputs.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

}  // namespace smilepc
