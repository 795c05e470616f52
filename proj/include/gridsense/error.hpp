#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridsense {

enum class ErrorCode {
    DuplicateBusId,
    DanglingLineRef,
    Underdetermined,
    EmptyMeterSet,
    InvalidNetwork,
    MissingPhaseBlock,
    NonFiniteInput,
    CellOutOfRange,
    InvalidQuantizer,
    DimensionMismatch,
    ProfileGap,
    UnsupportedK,
    NumericBlowup,
    Diverged,
    SingularSystem,
    ConfigParseError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace gridsense
