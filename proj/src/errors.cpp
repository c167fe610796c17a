#include "gradreduce/errors.hpp"

namespace gradreduce {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::ContractionViolated: return "ContractionViolated";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::BoxTooSmall: return "BoxTooSmall";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

} // namespace gradreduce
