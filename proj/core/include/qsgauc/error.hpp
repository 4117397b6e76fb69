#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qsgauc {

/// Stable machine-readable error categories. The CLI prints these verbatim.
enum class ErrorCode {
    InvalidParameter,
    InvalidInput,
    EmptyPool,
    ParseError,
    NumericalError,
    CapacityExceeded,
    IoError,
    InternalError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class InvalidParameter : public Error {
public:
    explicit InvalidParameter(const std::string& message)
        : Error(ErrorCode::InvalidParameter, message) {}
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& message)
        : Error(ErrorCode::InvalidInput, message) {}
};

class EmptyPool : public Error {
public:
    explicit EmptyPool(const std::string& pool)
        : Error(ErrorCode::EmptyPool, "pool '" + pool + "' is empty"), pool_(pool) {}

    const std::string& pool() const noexcept { return pool_; }

private:
    std::string pool_;
};

class CapacityExceeded : public Error {
public:
    explicit CapacityExceeded(const std::string& message)
        : Error(ErrorCode::CapacityExceeded, message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(ErrorCode::IoError, message) {}
};

/// Raised by text parsers. `line` is 1-based; 0 when the error is not tied to a line.
class ParseError : public Error {
public:
    enum class Kind { Malformed, VersionMismatch, Truncated };

    ParseError(Kind kind, std::size_t line, std::string field, const std::string& message);

    Kind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    Kind kind_;
    std::size_t line_;
    std::string field_;
};

} // namespace qsgauc
