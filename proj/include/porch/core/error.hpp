#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace porch {

enum class ErrorCode {
    MalformedEvent,
    InvariantViolation,
    BadSignature,
    ClockSkew,
    ReplayedNonce,
    Revoked,
    DimensionMismatch,
    BadScene,
    NoBackendAvailable,
    Unreachable,
    Timeout,
    ProtocolError,
    OutboxCorrupt,
    BadContainer,
    ParseError,
    UnknownTimePhrase,
    BadConfig,
    NotFound,
    Unauthorized,
    Conflict,
    HubError,
    BadFilter,
    DeviceMismatch,
    AlreadyTerminal,
    NonMonotonicSeq,
    Gone,
    BadRequest,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the project. `detail()` carries the offending
/// field name for validation errors, or the parse reason for ParseError.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail, const std::string& message = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace porch
