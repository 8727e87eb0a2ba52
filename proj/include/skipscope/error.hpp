#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skipscope {

enum class ErrorCode {
    format_rejected,
    io_error,
    validation_error,
    degenerate_vector,
    empty_modality,
    shape_mismatch,
    missing_metric,
    invalid_argument,
    domain_violation,
    solver_stalled,
    missing_query,
    empty_input,
    premise_failed,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::format_rejected: return "FORMAT_REJECTED";
    case ErrorCode::io_error: return "IO_ERROR";
    case ErrorCode::validation_error: return "VALIDATION_ERROR";
    case ErrorCode::degenerate_vector: return "DEGENERATE_VECTOR";
    case ErrorCode::empty_modality: return "EMPTY_MODALITY";
    case ErrorCode::shape_mismatch: return "SHAPE_MISMATCH";
    case ErrorCode::missing_metric: return "MISSING_METRIC";
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    case ErrorCode::domain_violation: return "DOMAIN_VIOLATION";
    case ErrorCode::solver_stalled: return "SOLVER_STALLED";
    case ErrorCode::missing_query: return "MISSING_QUERY";
    case ErrorCode::empty_input: return "EMPTY_INPUT";
    case ErrorCode::premise_failed: return "PREMISE_FAILED";
    }
    return "UNKNOWN";
}

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message)
    {
    }

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace skipscope
