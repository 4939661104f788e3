#include "perspface/error.hpp"

namespace perspface {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
        case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::InvalidPixel: return "InvalidPixel";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
        case ErrorCode::PixelOutsideFace: return "PixelOutsideFace";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::InvalidDimension: return "InvalidDimension";
        case ErrorCode::NotAProbabilityRow: return "NotAProbabilityRow";
        case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
        case ErrorCode::BehindCamera: return "BehindCamera";
        case ErrorCode::NoConsensus: return "NoConsensus";
        case ErrorCode::PreconditionViolation: return "PreconditionViolation";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::EmptyMesh: return "EmptyMesh";
        case ErrorCode::InvalidCount: return "InvalidCount";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), index_(index) {}

}  // namespace perspface
