#pragma once

#include <stdexcept>
#include <string>

namespace rslf {

/// Bad caller input: ranges, counts, shapes. Maps to CLI exit code 2.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Index outside a tensor axis; the message names the axis.
class BoundsError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Unreadable, missing, malformed or corrupted on-disk data. Exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stored content hash does not match the file on disk.
class CorruptionError : public DataError {
 public:
  using DataError::DataError;
};

/// Container schema version this build does not understand.
class VersionError : public DataError {
 public:
  using DataError::DataError;
};

/// NaN losses, divergence, points behind the camera. Exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BehindCameraError : public NumericalError {
 public:
  explicit BehindCameraError(const std::string& what, double disparity = 0.0)
      : NumericalError(what), disparity_(disparity) {}
  double disparity() const noexcept { return disparity_; }

 private:
  double disparity_;
};

}  // namespace rslf
