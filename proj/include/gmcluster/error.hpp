#pragma once

#include <stdexcept>
#include <string>

namespace gmcluster {

enum class ErrorCode {
    NonFiniteInput,
    AllColumnsConstant,
    NotStandardized,
    DimensionMismatch,
    SingleCluster,
    KOutOfRange,
    SingularCovariance,
    EmptyCluster,
    LengthMismatch,
    AllFitsDegenerate,
    ObjectIdMismatch,
    ParseError,
    InvalidArgument,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::AllColumnsConstant: return "AllColumnsConstant";
    case ErrorCode::NotStandardized: return "NotStandardized";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllFitsDegenerate: return "AllFitsDegenerate";
    case ErrorCode::ObjectIdMismatch: return "ObjectIdMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace gmcluster
