#pragma once

#include <stdexcept>
#include <string>

namespace ldmaps {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument or data set violates a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown: non-convergence, singular modes, degenerate spectra.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace ldmaps
