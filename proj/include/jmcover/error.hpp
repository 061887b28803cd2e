#pragma once

#include <stdexcept>
#include <string>

namespace jmcover {

/// Base for all domain failures; the CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

class InfiniteMoment : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// A growth simulation was truncated at a horizon smaller than the cover
/// time it produced; the caller must extend the sample and retry.
class InsufficientHalo : public Error {
 public:
  InsufficientHalo(double cover_time, double horizon)
      : Error("insufficient horizon: cover time " + std::to_string(cover_time) +
              " exceeds sampled horizon " + std::to_string(horizon) + "; re-sample with a larger t_max"),
        cover_time_(cover_time),
        horizon_(horizon) {}
  double cover_time() const { return cover_time_; }
  double horizon() const { return horizon_; }

 private:
  double cover_time_;
  double horizon_;
};

}  // namespace jmcover
