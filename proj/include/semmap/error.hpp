#pragma once

#include <stdexcept>
#include <string>

namespace semmap {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain (x <= 0, NaN, negative step, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Mismatched K or J between parameters, measurements or targets.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Class label or coordinate outside the valid range.
class IndexError : public Error {
public:
  using Error::Error;
};

/// Posterior moments that cannot be inverted into valid parameters.
class DegenerateMomentsError : public Error {
public:
  using Error::Error;
};

/// Every mixture component assigns zero likelihood to a property measurement.
class SuppressedMeasurementError : public Error {
public:
  using Error::Error;
};

/// A measurement or query timestamp earlier than the stored clock.
class TimeRegressionError : public Error {
public:
  using Error::Error;
};

/// Failure of one of the brute-force verification routines
/// (term blow-up guard, quadrature non-convergence, low effective sample size).
class OracleError : public Error {
public:
  using Error::Error;
};

/// Reading or writing scenario inputs and outputs failed.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace semmap
