#pragma once

#include <stdexcept>
#include <string>

namespace edgespike {

/// Base class for all errors raised by the library.  Input / configuration
/// problems derive from ValidationError, solver-side failures from
/// SolverError; the CLI maps these onto its exit-code contract.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument, configuration value, or precondition violation.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A numerical routine failed to produce a trustworthy result.
class SolverError : public Error {
public:
  using Error::Error;
};

/// The initial shooting bracket does not straddle the ground-state dichotomy.
class NoBracket : public SolverError {
public:
  using SolverError::SolverError;
};

/// Two-level grid refinement of an eigenvalue disagrees beyond tolerance.
class GridTooCoarse : public SolverError {
public:
  using SolverError::SolverError;
};

/// An eigenfunction concentrates at the artificial outer boundary, i.e. it is
/// an artifact of the domain truncation rather than a mode of the problem.
class SpuriousMode : public SolverError {
public:
  using SolverError::SolverError;
};

/// Operation undefined at (or too close to) the flat angle where the kernel
/// dimension jumps.
class DegenerateCase : public SolverError {
public:
  using SolverError::SolverError;
};

/// Wedge opening angle too close to 0 or to the flat angle pi somewhere along
/// the edge.
class DegenerateAngle : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// An iterative solver exhausted its iteration budget.
class NonConvergence : public SolverError {
public:
  using SolverError::SolverError;
};

/// The projected Hessian shows more negative directions than the cone
/// spectrum predicts: the coercivity assumption failed on this grid.
class IndefiniteProjectedHessian : public SolverError {
public:
  using SolverError::SolverError;
};

/// Newton iterates decayed toward the zero solution.
class CollapseToZero : public SolverError {
public:
  using SolverError::SolverError;
};

/// The grid does not resolve one unit of the scaled variable near the spike.
class SpikeTooCoarse : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// A coordinate or parameter lies outside its admissible interval.
class OutOfRange : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// A Richardson error estimate of a quadrature exceeds its tolerance.
class QuadratureUnconverged : public SolverError {
public:
  using SolverError::SolverError;
};

/// File / format problem while reading or writing artifacts.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace edgespike
