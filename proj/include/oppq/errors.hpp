#pragma once

#include <stdexcept>
#include <string>

namespace oppq {

/// Base class for every failure this library raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Rejected inputs: bad digit counts, empty windows, unknown problem names, ...
struct ConfigError : Error {
    using Error::Error;
};

/// The requested result cannot be produced at the configured working
/// precision.  Raising the digit count is the only remedy; results are never
/// regularized or fudged to hide it.
struct PrecisionError : Error {
    using Error::Error;
};

struct PrecisionExhausted : PrecisionError {
    using PrecisionError::PrecisionError;
};

/// An alternating sum lost more leading digits than the guard allowance.
struct CancellationDetected : PrecisionError {
    using PrecisionError::PrecisionError;
};

/// A Gram/moment matrix that is positive definite in exact arithmetic failed
/// its Cholesky factorization numerically.
struct CholeskyNotPD : PrecisionError {
    using PrecisionError::PrecisionError;
};

/// A projection matrix that must be positive definite was not.
struct NotPositiveDefinite : PrecisionError {
    using PrecisionError::PrecisionError;
};

/// The lower-right block inverted by the constrained quadratic-form
/// minimization was not positive definite.
struct SubmatrixNotPD : PrecisionError {
    using PrecisionError::PrecisionError;
};

/// Structural / search failures that are not precision-related.
struct NumericalError : Error {
    using Error::Error;
};

/// A recurrence step would divide by a vanishing coefficient.
struct SingularStep : NumericalError {
    using NumericalError::NumericalError;
};

/// A moment-generation linear system had no unique solution.
struct LinearSolveSingular : NumericalError {
    using NumericalError::NumericalError;
};

/// A table or basis does not cover the order a caller asked for.
struct CoverageError : NumericalError {
    using NumericalError::NumericalError;
};

/// No interior local minimum inside the scan window.
struct NoMinimumFound : NumericalError {
    using NumericalError::NumericalError;
};

/// The bounding cap lies at or below the functional minimum, so level-set
/// roots cannot exist.
struct CapBelowMinimum : NumericalError {
    using NumericalError::NumericalError;
};

/// Outward root bracketing ran into a neighboring basin or window edge
/// before the functional exceeded the cap.
struct NeighborCollision : NumericalError {
    using NumericalError::NumericalError;
};

/// Filesystem trouble (cache directory, output files).
struct IoError : Error {
    using Error::Error;
};

}  // namespace oppq
