#pragma once

#include <stdexcept>
#include <string>

namespace stdinfo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The requested quantity is not defined for this parameter regime
/// (e.g. the alpha = -1 boundary case of the rearrangement asymptotics).
class UnsupportedCase : public Error {
 public:
  using Error::Error;
};

/// A series that must converge does not (e.g. power-law exponent r <= 1/2).
class Divergent : public Error {
 public:
  using Error::Error;
};

/// All nonzero eigenvalues coincide, so sigma^2 = 0 and the normal quantile
/// argument of the relative-cardinality limit is undefined.
class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

/// An enumeration or search hit its configured memory/work cap.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A configuration document failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace stdinfo
