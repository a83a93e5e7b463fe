#pragma once

#include <stdexcept>
#include <string>

namespace flowmotion {

// Base for all library errors. Subcommands map these to exit code 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad caller-supplied value (counts, ranges, non-finite input).
struct ArgumentError : Error {
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// Malformed file container (magic, version, header syntax).
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Well-formed file with a dtype outside the supported profile.
struct UnsupportedDtypeError : FormatError {
    explicit UnsupportedDtypeError(const std::string& msg) : FormatError(msg) {}
};

// Array/tensor dimensions violate a contract.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Payload shorter or longer than the header promises.
struct LengthError : FormatError {
    explicit LengthError(const std::string& msg) : FormatError(msg) {}
};

// Box rounds to zero area at the crop stage.
struct DegenerateBoxError : Error {
    explicit DegenerateBoxError(const std::string& msg) : Error(msg) {}
};

// Timestamps out of order (t2 <= t1 where forward motion is required).
struct TemporalOrderError : Error {
    explicit TemporalOrderError(const std::string& msg) : Error(msg) {}
};

// A track is too short to form the requested observation pair.
struct InsufficientTrackError : Error {
    explicit InsufficientTrackError(const std::string& msg) : Error(msg) {}
};

// Query time outside the keyframe interval (interpolation only).
struct ExtrapolationError : Error {
    explicit ExtrapolationError(const std::string& msg) : Error(msg) {}
};

// Query time earlier than every keyframe (label propagation).
struct NoPredecessorError : Error {
    explicit NoPredecessorError(const std::string& msg) : Error(msg) {}
};

// Non-finite value where the pipeline requires finite arithmetic.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Metric denominator is zero; never silently reported as 0.
struct UndefinedMetricError : Error {
    explicit UndefinedMetricError(const std::string& msg) : Error(msg) {}
};

// Synthetic scene configuration cannot be rendered as requested.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File missing / unreadable / unwritable.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace flowmotion
