#pragma once

#include <stdexcept>

namespace kph {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation produced non-finite values, a simulation blew up, or a linear
// solve failed to meet its residual contract.
struct NumericalError : Error {
  using Error::Error;
};

// A matrix violated a declared structural property (skewness, symmetry,
// definiteness) beyond tolerance.
struct StructureError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IOError : Error {
  using Error::Error;
};

// Gram matrix of the observable dictionary is numerically singular.
struct SingularGramError : Error {
  using Error::Error;
};

// Symmetric part of a fitted generator has a positive eigenvalue beyond
// tolerance, so no dissipative splitting exists.
struct NotDissipativeError : Error {
  using Error::Error;
};

struct NotHurwitzError : Error {
  using Error::Error;
};

// A dense linear system that should be regular turned out singular.
struct SolveError : Error {
  using Error::Error;
};

struct NotSchurError : Error {
  using Error::Error;
};

struct EigenvalueFailure : Error {
  using Error::Error;
};

// A runtime certificate (passivity check, cost monotonicity, terminal
// Lyapunov inequality) failed.
struct CertificateError : Error {
  using Error::Error;
};

}  // namespace kph
