#pragma once

#include <stdexcept>
#include <string>

namespace mks {

// Invalid grid, cutoff, scheme or experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An operation was called on data in the wrong state (representation tag,
// grid mismatch, off-grid time).
class UsageError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Requested feature is not available for the given input (e.g. F'' for q <= 1).
class UnsupportedError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Iteration failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// State norm exceeded the blow-up threshold or became NaN.
class BlowUpError : public NumericalError {
public:
  BlowUpError(double time, double norm)
      : NumericalError("blow-up at t=" + std::to_string(time) +
                       " (|y|_2=" + std::to_string(norm) + ")"),
        time_(time), norm_(norm) {}

  double time() const noexcept { return time_; }
  double norm() const noexcept { return norm_; }

private:
  double time_;
  double norm_;
};

}  // namespace mks
