#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gazerace {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class MissingLandmark : public Error {
 public:
  explicit MissingLandmark(int index)
      : Error("missing landmark " + std::to_string(index)), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

class InvalidLandmark : public Error {
 public:
  using Error::Error;
};

/// Calibration failures carry the offending action name.
class CalibrationError : public Error {
 public:
  CalibrationError(std::string what, std::string action)
      : Error(std::move(what)), action_(std::move(action)) {}
  const std::string& action() const noexcept { return action_; }

 private:
  std::string action_;
};

class MissingAction : public CalibrationError {
 public:
  explicit MissingAction(const std::string& action)
      : CalibrationError("no calibration samples for action " + action, action) {}
};

class InsufficientSamples : public CalibrationError {
 public:
  InsufficientSamples(const std::string& action, std::size_t have, std::size_t need)
      : CalibrationError("action " + action + " has " + std::to_string(have) +
                             " samples, need " + std::to_string(need),
                         action) {}
};

class NoisyAction : public CalibrationError {
 public:
  explicit NoisyAction(const std::string& action)
      : CalibrationError("calibration samples for action " + action + " are too noisy", action) {}
};

class IllegalTransition : public Error {
 public:
  using Error::Error;
};

class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

class AllZeroDifferences : public Error {
 public:
  AllZeroDifferences() : Error("all paired differences are zero") {}
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class MalformedFrame : public Error {
 public:
  using Error::Error;
};

class CorruptRecording : public Error {
 public:
  CorruptRecording(std::size_t line, const std::string& why)
      : Error("corrupt recording at line " + std::to_string(line) + ": " + why), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class BindError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gazerace
