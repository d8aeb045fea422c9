#pragma once

#include <stdexcept>
#include <string>

namespace alfven {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two arrays or fields live on different grids.
class ShapeMismatch : public Error {
public:
  using Error::Error;
};

/// A parameter lies outside its admissible range.
class RangeError : public Error {
public:
  using Error::Error;
};

/// A required configuration key is absent.
class MissingKey : public Error {
public:
  using Error::Error;
};

/// A wave packet does not fit the box for the planned run.
class MarginViolation : public Error {
public:
  using Error::Error;
};

/// Tracked packets would interact through the periodic boundary.
class DomainExhaustion : public Error {
public:
  using Error::Error;
};

/// max|z| grew past the configured cap; the small-data regime was left.
class BlowupDetected : public Error {
public:
  using Error::Error;
};

/// A convergence query needs more recorded checkpoints.
class InsufficientHistory : public Error {
public:
  using Error::Error;
};

/// Input data is malformed (non-finite samples, bad headers, ...).
class InvalidData : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace alfven
