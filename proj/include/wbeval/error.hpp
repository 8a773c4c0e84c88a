#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wbeval {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A line or document could not be parsed. `line()` is 1-based, 0 when not
/// tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Parsed input that violates a domain invariant.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Binary container is not what it claims to be (magic, version, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Gallery/probe protocol cannot support the requested metric.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A sampling request that cannot be satisfied by the available data.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

class DegenerateTemplateError : public Error {
public:
    using Error::Error;
};

/// Batch-hard mining found an anchor without a same-subject partner.
class NoPositiveError : public Error {
public:
    using Error::Error;
};

/// Batch-hard mining found an anchor without a different-subject sample.
class NoNegativeError : public Error {
public:
    using Error::Error;
};

}  // namespace wbeval
