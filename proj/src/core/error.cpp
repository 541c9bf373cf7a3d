#include "porch/core/error.hpp"

namespace porch {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::MalformedEvent: return "MalformedEvent";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::BadSignature: return "BadSignature";
    case ErrorCode::ClockSkew: return "ClockSkew";
    case ErrorCode::ReplayedNonce: return "ReplayedNonce";
    case ErrorCode::Revoked: return "Revoked";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadScene: return "BadScene";
    case ErrorCode::NoBackendAvailable: return "NoBackendAvailable";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::OutboxCorrupt: return "OutboxCorrupt";
    case ErrorCode::BadContainer: return "BadContainer";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownTimePhrase: return "UnknownTimePhrase";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::HubError: return "HubError";
    case ErrorCode::BadFilter: return "BadFilter";
    case ErrorCode::DeviceMismatch: return "DeviceMismatch";
    case ErrorCode::AlreadyTerminal: return "AlreadyTerminal";
    case ErrorCode::NonMonotonicSeq: return "NonMonotonicSeq";
    case ErrorCode::Gone: return "Gone";
    case ErrorCode::BadRequest: return "BadRequest";
    }
    return "Unknown";
}

static std::string compose(ErrorCode code, const std::string& detail, const std::string& message) {
    std::string out(to_string(code));
    if (!detail.empty()) out += "(" + detail + ")";
    if (!message.empty()) out += ": " + message;
    return out;
}

Error::Error(ErrorCode code, std::string detail, const std::string& message)
    : std::runtime_error(compose(code, detail, message)), code_(code), detail_(std::move(detail)) {}

}  // namespace porch
