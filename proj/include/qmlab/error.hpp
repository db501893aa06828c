#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmlab {

/// Input rejected before any numerics ran (malformed data, violated preconditions).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to deliver a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sampled circle path jumped by half a turn or more between two samples.
/// `index()` is the sample at which the offending step starts; callers
/// subdivide that step and retry.
class RefineError : public NumericalError {
 public:
  RefineError(std::size_t index, double step_turns);
  std::size_t index() const noexcept { return index_; }
  double step_turns() const noexcept { return step_turns_; }

 private:
  std::size_t index_;
  double step_turns_;
};

/// Evaluating a quasi-morphism on x^p failed; wraps the underlying message.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(long long power, const std::string& what);
  long long power() const noexcept { return power_; }

 private:
  long long power_;
};

}  // namespace qmlab
