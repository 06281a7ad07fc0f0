#include "errors.hpp"

namespace rblab {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ok: return "Ok";
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::range_error: return "RangeError";
        case ErrorCode::schema_error: return "SchemaError";
        case ErrorCode::diagonal_evaluation: return "DiagonalEvaluation";
        case ErrorCode::resource_limit: return "ResourceLimit";
        case ErrorCode::embedding_failure: return "EmbeddingFailure";
        case ErrorCode::numerical_blowup: return "NumericalBlowup";
        case ErrorCode::incompatible_grid: return "IncompatibleGrid";
        case ErrorCode::odd_sample_size: return "OddSampleSize";
        case ErrorCode::degenerate_path: return "DegeneratePath";
        case ErrorCode::degenerate_regressor: return "DegenerateRegressor";
        case ErrorCode::degenerate_diffusion: return "DegenerateDiffusion";
        case ErrorCode::degenerate_sample: return "DegenerateSample";
        case ErrorCode::insufficient_resolution: return "InsufficientResolution";
        case ErrorCode::insufficient_points: return "InsufficientPoints";
        case ErrorCode::missing_calibration: return "MissingCalibration";
        case ErrorCode::empty_cell: return "EmptyCell";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::internal_error: return "InternalError";
    }
    return "UnknownError";
}

} // namespace rblab
