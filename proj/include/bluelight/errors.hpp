#pragma once

#include <stdexcept>
#include <string>

namespace bluelight {

// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A text input did not match the expected grammar. Carries the 1-based
// line number when the failure can be attributed to one.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// A parsed value violates its declared range.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

// A sidecar file's row count differs from its paired label file.
class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// A structured config is missing required fields or has unknown ones.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A validated type's invariant does not hold.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// The distortion polynomial is not strictly increasing on the declared
// field-of-view interval.
class MonotonicityViolation : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

// Incidence angle (or its image-side radius) lies outside the interval on
// which the camera model was validated.
class OutOfModelRange : public Error {
 public:
  using Error::Error;
};

// Point with non-positive depth passed to a pinhole projection.
class BehindCamera : public Error {
 public:
  using Error::Error;
};

// An iterative solver hit its iteration cap without meeting tolerance.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// Input geometry does not determine the requested parameters.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// The camera pose graph has a component not reachable from any anchor.
class DisconnectedGraph : public Error {
 public:
  using Error::Error;
};

// Vehicle-level metrics requested on a scene without a vehicle grouping.
class MissingVehicleIds : public Error {
 public:
  using Error::Error;
};

// Camera id not present in the rig configuration.
class UnknownCamera : public Error {
 public:
  using Error::Error;
};

}  // namespace bluelight
