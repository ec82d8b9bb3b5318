#pragma once

#include <stdexcept>
#include <string>

namespace spm {

// Error kinds shared by the whole toolkit. The C API maps these 1:1 onto
// spm_status codes, so every new kind needs a slot in include/spinemetry.h.
enum class ErrorCode {
    Argument,             // bad parameter or precondition violation
    Bounds,               // index outside the grid
    Format,               // malformed input (header fields, JSON, axis codes, ...)
    BadMagic,             // not a NIfTI-1 file at all
    UnsupportedFormat,    // recognizably NIfTI but outside the supported subset
    UnsupportedDatatype,  // datatype code outside {uint8, int16, float32}
    Truncated,            // file shorter than header + payload demand
    ByteOrder,            // big-endian file; we read little-endian only
    LossyWrite,           // values not representable in the requested datatype
    Io,                   // filesystem-level failure
    InsufficientOverlap,  // too few shared columns to measure a disc
    InconsistentLabels,   // interpenetrating vertebra labels
    NoCanalAtLevel,       // no canal voxels in the requested slice
    Labeling,             // baseline segmenter found the wrong component count
    DuplicateId,          // repeated scan_id in a manifest
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Argument: return "argument";
        case ErrorCode::Bounds: return "bounds";
        case ErrorCode::Format: return "format";
        case ErrorCode::BadMagic: return "bad-magic";
        case ErrorCode::UnsupportedFormat: return "unsupported-format";
        case ErrorCode::UnsupportedDatatype: return "unsupported-datatype";
        case ErrorCode::Truncated: return "truncated";
        case ErrorCode::ByteOrder: return "byte-order";
        case ErrorCode::LossyWrite: return "lossy-write";
        case ErrorCode::Io: return "io";
        case ErrorCode::InsufficientOverlap: return "insufficient-overlap";
        case ErrorCode::InconsistentLabels: return "inconsistent-segmentation";
        case ErrorCode::NoCanalAtLevel: return "no-canal-at-level";
        case ErrorCode::Labeling: return "labeling";
        case ErrorCode::DuplicateId: return "duplicate-id";
    }
    return "unknown";
}

}  // namespace spm
