// SPDX-License-Identifier: Apache-2.0

#ifndef HCAP_ERRORS_HPP
#define HCAP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hcap {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// Gamma function evaluated at (or too close to) a non-positive integer.
struct PoleError : DomainError {
    using DomainError::DomainError;
};

/// The left and right pole sets of a Mellin-Barnes integrand overlap, so no
/// separating contour exists.
struct NoContourError : Error {
    using Error::Error;
};

/// Contour quadrature failed to stabilize under node refinement.
struct ConvergenceError : Error {
    using Error::Error;
};

/// Adaptive quadrature exhausted its interval budget.
struct QuadratureError : Error {
    using Error::Error;
};

/// A truncated infinite series was cut off before meeting its tolerance.
struct SeriesNotConverged : Error {
    using Error::Error;
};

/// A logarithm (or similar) was requested of a non-positive intermediate value.
struct RangeError : Error {
    using Error::Error;
};

/// Copula correlation calibration did not reach the requested accuracy.
struct CalibrationError : Error {
    using Error::Error;
};

/// Scenario file could not be parsed; message carries field diagnostics.
struct ParseError : Error {
    using Error::Error;
};

} // namespace hcap

#endif
