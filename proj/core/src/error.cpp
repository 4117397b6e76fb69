#include "qsgauc/error.hpp"

namespace qsgauc {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidParameter: return "INVALID_PARAMETER";
    case ErrorCode::InvalidInput: return "INVALID_INPUT";
    case ErrorCode::EmptyPool: return "EMPTY_POOL";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::NumericalError: return "NUMERICAL_ERROR";
    case ErrorCode::CapacityExceeded: return "CAPACITY_EXCEEDED";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::InternalError: return "INTERNAL_ERROR";
    }
    return "UNKNOWN";
}

namespace {

std::string_view kind_name(ParseError::Kind kind) {
    switch (kind) {
    case ParseError::Kind::Malformed: return "malformed";
    case ParseError::Kind::VersionMismatch: return "version mismatch";
    case ParseError::Kind::Truncated: return "truncated";
    }
    return "?";
}

} // namespace

ParseError::ParseError(Kind kind, std::size_t line, std::string field, const std::string& message)
    : Error(ErrorCode::ParseError,
            std::string(kind_name(kind)) + (line ? " at line " + std::to_string(line) : "") +
                " [" + field + "]: " + message),
      kind_(kind), line_(line), field_(std::move(field)) {}

} // namespace qsgauc
