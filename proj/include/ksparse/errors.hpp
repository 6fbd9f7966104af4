// Error types shared across the library.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ksparse {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension or index-range violation (out-of-range column, length mismatch).
struct DimensionMismatch : Error {
    using Error::Error;
};

// Bad row/column index passed to an incremental update.
struct IndexError : Error {
    using Error::Error;
};

// Gram matrix of the selected columns is (numerically) singular.
struct RankDeficient : Error {
    using Error::Error;
};

// Maintained RSS drifted from a from-scratch solve beyond tolerance.
struct DriftExceeded : Error {
    using Error::Error;
};

// Pair-flip proposal impossible: the support is empty or full.
struct DegenerateSupport : Error {
    using Error::Error;
};

// Could not find a full-rank random initial support.
struct InitializationFailed : Error {
    using Error::Error;
};

// Enumeration request exceeds the configured support-count cap.
struct TooLarge : Error {
    using Error::Error;
};

// A leave-one-out leverage reached 1: the closed-form LOO residual blows up.
struct LeverageSingular : Error {
    using Error::Error;
};

// Input file contains no usable data rows.
struct EmptyData : Error {
    using Error::Error;
};

// Malformed input file; carries a 1-based row and column when known.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t row = 0, std::size_t col = 0)
        : Error(msg), row(row), col(col) {}
    std::size_t row;
    std::size_t col;
};

// Cell that should hold a number does not parse as one.
struct NonNumericCell : ParseError {
    using ParseError::ParseError;
};

}  // namespace ksparse
