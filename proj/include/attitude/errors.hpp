#pragma once

#include <stdexcept>
#include <string>

namespace attitude {

/// Base class for all domain errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// log_so3 called on a rotation with trace <= -1 + 1e-12 (angle at pi).
struct AngleAtPi : Error {
  using Error::Error;
};

/// Polar decomposition of a (near-)singular flux moment.
struct SingularFlux : Error {
  using Error::Error;
};

/// Stereographic chart evaluated at or too close to the north pole.
struct PoleSingularity : Error {
  using Error::Error;
};

/// SO(3) grid below the minimum supported resolution.
struct GridTooCoarse : Error {
  using Error::Error;
};

/// 3D and 1D evaluations of the VMF normalizer disagree beyond tolerance.
struct QuadratureMismatch : Error {
  using Error::Error;
};

/// Discrete theta-line boundary-value system is numerically singular.
struct SolverSingular : Error {
  using Error::Error;
};

/// Normalization integral of the m~ weight is too close to zero.
struct DegenerateWeight : Error {
  using Error::Error;
};

/// Discrete Fokker-Planck kernel is not one-dimensional at this resolution.
struct DegenerateKernel : Error {
  using Error::Error;
};

/// Time step violates the CFL restriction.
struct CflViolation : Error {
  using Error::Error;
};

/// Density lost positivity.
struct NonPositiveDensity : Error {
  using Error::Error;
};

/// Corrector right-hand side has a component in the non-solvable directions
/// (the macroscopic fields do not satisfy the hydrodynamic system).
struct InconsistentRHS : Error {
  using Error::Error;
};

/// Configuration file is malformed or inconsistent.
struct ConfigError : Error {
  using Error::Error;
};

/// A matrix that was required to be a rotation failed the invariants.
struct NotARotation : Error {
  using Error::Error;
};

}  // namespace attitude
