#pragma once

#include <stdexcept>
#include <string>

namespace lqgtl {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, long iterations = -1)
      : Error(what), iterations_(iterations) {}
  long iterations() const { return iterations_; }

 private:
  long iterations_;
};

// A structural assumption (observability of the gain rows, controllability
// of the filter) does not hold.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

// Trajectory too short; carries the minimum length that would have worked.
class InsufficientData : public Error {
 public:
  InsufficientData(const std::string& what, long required)
      : Error(what + " (required length " + std::to_string(required) + ")"),
        required_(required) {}
  long required() const { return required_; }

 private:
  long required_;
};

class InconsistentData : public Error {
 public:
  using Error::Error;
};

// Kernel intersection of the source gains has the wrong dimension.
class DiversityViolation : public Error {
 public:
  DiversityViolation(const std::string& what, long achieved, long expected)
      : Error(what + " (kernel dimension " + std::to_string(achieved) +
              ", expected " + std::to_string(expected) + ")"),
        achieved_(achieved),
        expected_(expected) {}
  long achieved() const { return achieved_; }
  long expected() const { return expected_; }

 private:
  long achieved_;
  long expected_;
};

class PersistencyFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace lqgtl
