#pragma once

#include <stdexcept>
#include <string>

namespace mandiff {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A vector or matrix argument has the wrong size.
struct DimensionError : Error {
  using Error::Error;
};

/// The constraint gradient lost rank (e.g. sphere normal at the origin).
struct GeometricDegeneracyError : Error {
  using Error::Error;
};

/// Closest-point projection did not converge; carries the final residual.
struct ProjectionError : Error {
  double residual;
  ProjectionError(const std::string& msg, double res)
      : Error(msg + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

/// Tangent vector does not lie in the tangent space at the base point.
struct InvalidTangentError : Error {
  using Error::Error;
};

/// The exponent alpha = log(c)/log(sigma) is undefined or nonpositive.
struct InvalidAlphaError : Error {
  using Error::Error;
};

/// Non-finite values encountered (overflowing activations, NaN loss).
struct NumericError : Error {
  using Error::Error;
};

/// Operation not defined for the requested method/manifold combination.
struct UnsupportedMethodError : Error {
  using Error::Error;
};

/// Degenerate mesh input (zero-area face, bad index, non-triangle record).
struct MeshQualityError : Error {
  using Error::Error;
};

/// Query point is so far from every quadrature node that all kernel
/// log-weights underflow.
struct QuadratureUnderflowError : Error {
  using Error::Error;
};

/// Malformed configuration or invalid key combination.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace mandiff
