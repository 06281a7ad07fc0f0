#pragma once

#include <stdexcept>
#include <string>

namespace rblab {

// Error taxonomy shared by the C++ core and the C API.  The numeric values
// are part of the shared-library ABI (see include/rblab.h) and must not be
// reordered.
enum class ErrorCode : int {
    ok = 0,
    invalid_argument = 1,
    range_error = 2,
    schema_error = 3,
    diagonal_evaluation = 4,
    resource_limit = 5,
    embedding_failure = 6,
    numerical_blowup = 7,
    incompatible_grid = 8,
    odd_sample_size = 9,
    degenerate_path = 10,
    degenerate_regressor = 11,
    degenerate_diffusion = 12,
    degenerate_sample = 13,
    insufficient_resolution = 14,
    insufficient_points = 15,
    missing_calibration = 16,
    empty_cell = 17,
    io_error = 18,
    internal_error = 19,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* code_name() const noexcept { return error_code_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) fail(code, message);
}

} // namespace rblab
