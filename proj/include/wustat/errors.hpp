#pragma once

#include <stdexcept>
#include <string>

namespace wustat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition on an argument violated (degree > n, repeated indices, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Enumeration or table guard exceeded.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Scalar argument outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Quadrature did not reach the requested tolerance.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double achieved)
      : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class InvalidPlan : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Statistic or sample with zero variance where a positive one is required.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wustat
