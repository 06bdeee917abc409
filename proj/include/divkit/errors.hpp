#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace divkit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnknownIdentifier : public ParseError {
public:
    UnknownIdentifier(std::string token, std::size_t offset)
        : ParseError("unknown identifier '" + token + "'", offset), token_(std::move(token)) {}

    const std::string& token() const noexcept { return token_; }

private:
    std::string token_;
};

/// Evaluation outside the domain of a builtin (log of non-positive, division by zero, ...)
/// or a point outside a chart domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation was violated by its arguments.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class ChartMismatch : public PreconditionError {
public:
    ChartMismatch() : PreconditionError("objects live on different charts") {}
};

/// Spec-file or model validation failure; `line` is 1-based, 0 when not tied to a line.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace divkit
