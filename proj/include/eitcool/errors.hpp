#pragma once

#include <stdexcept>
#include <string>

namespace eitcool {

// Base for every error the toolkit raises. The CLI maps ContractViolation
// to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad shapes, bad parameter ranges).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Numerical failure of a well-posed request.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class StiffnessError : public NumericalError {
 public:
  StiffnessError(const std::string& what, double last_good_time)
      : NumericalError(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

class DegenerateFitError : public NumericalError {
 public:
  DegenerateFitError(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonUniqueSteadyStateError : public NumericalError {
 public:
  NonUniqueSteadyStateError(const std::string& what, int kernel_dim)
      : NumericalError(what), kernel_dim_(kernel_dim) {}
  int kernel_dim() const { return kernel_dim_; }

 private:
  int kernel_dim_;
};

class TimeoutError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StructuralSearchError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, int mode)
      : NumericalError(what), mode_(mode) {}
  int mode() const { return mode_; }

 private:
  int mode_;
};

class CapacityError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

class OutOfRangeError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

class NearResonanceError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

class AmbiguityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnphysicalRatioError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace eitcool
