#pragma once

#include <stdexcept>
#include <string>

namespace gradreduce {

enum class ErrorCode {
    InvalidArgument,
    IndexOutOfRange,
    GridMismatch,
    MaxIterations,
    ContractionViolated,
    NoConvergence,
    BlowUp,
    CflViolation,
    BoxTooSmall,
    SupportMismatch,
    NonPositiveDensity,
    ConfigInvalid,
    Io,
};

const char* to_string(ErrorCode code);

// All library failures surface as this exception; the code drives CLI exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

} // namespace gradreduce
