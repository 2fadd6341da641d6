#pragma once

#include <stdexcept>
#include <string>

namespace pesgen {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition
/// (degenerate cell, bad atomic number, asymmetric strain, ...).
struct InvalidInput : Error {
  using Error::Error;
};

/// An operation is not defined for this kind of input
/// (e.g. supercells or virials of non-periodic structures).
struct Unsupported : Error {
  using Error::Error;
};

/// Model/config shapes do not line up (feature-dimension mismatch, unknown keys).
struct ConfigError : Error {
  using Error::Error;
};

/// File could not be read, written, or parsed. Parse failures carry the line number.
struct IoError : Error {
  using Error::Error;
};

/// A numerical procedure produced non-finite values or failed to proceed.
struct NumericalError : Error {
  using Error::Error;
};

/// Random packing could not satisfy the minimum-distance constraint.
struct PackingInfeasible : Error {
  using Error::Error;
};

}  // namespace pesgen
