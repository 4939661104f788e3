#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace perspface {

enum class ErrorCode {
    NonPositiveDepth,
    DegenerateConfiguration,
    ParseError,
    InvariantViolation,
    InvalidPixel,
    DimensionMismatch,
    DegenerateTriangle,
    PixelOutsideFace,
    EmptyMask,
    InvalidDimension,
    NotAProbabilityRow,
    DegenerateGeometry,
    BehindCamera,
    NoConsensus,
    PreconditionViolation,
    EmptyInput,
    EmptyMesh,
    InvalidCount,
    IoError,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library. `index()` carries the offending
/// element (point, pixel, row, line number) when one applies.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> index = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> index_;
};

}  // namespace perspface
