#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mfnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateVector : public Error {
 public:
  using Error::Error;
};

class DegenerateMeasure : public Error {
 public:
  using Error::Error;
};

class EmptyBatch : public Error {
 public:
  using Error::Error;
};

class UnitMismatch : public Error {
 public:
  using Error::Error;
};

/// Spec or config rejected before any work started.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A particle left its admissible set during an integration step.
class StepFailure : public Error {
 public:
  StepFailure(std::int64_t step, int particle, const std::string& what)
      : Error("step " + std::to_string(step) + ", particle " + std::to_string(particle) + ": " +
              what),
        step_(step),
        particle_(particle) {}

  std::int64_t step() const { return step_; }
  int particle() const { return particle_; }

 private:
  std::int64_t step_;
  int particle_;
};

}  // namespace mfnet
