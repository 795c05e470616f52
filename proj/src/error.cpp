#include "gridsense/error.hpp"

namespace gridsense {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DuplicateBusId: return "DuplicateBusId";
        case ErrorCode::DanglingLineRef: return "DanglingLineRef";
        case ErrorCode::Underdetermined: return "Underdetermined";
        case ErrorCode::EmptyMeterSet: return "EmptyMeterSet";
        case ErrorCode::InvalidNetwork: return "InvalidNetwork";
        case ErrorCode::MissingPhaseBlock: return "MissingPhaseBlock";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::CellOutOfRange: return "CellOutOfRange";
        case ErrorCode::InvalidQuantizer: return "InvalidQuantizer";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ProfileGap: return "ProfileGap";
        case ErrorCode::UnsupportedK: return "UnsupportedK";
        case ErrorCode::NumericBlowup: return "NumericBlowup";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ConfigParseError: return "ConfigParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace gridsense
