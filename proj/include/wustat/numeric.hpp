#pragma once

#include <cmath>

namespace wustat {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// phi(k) = 1 + 1/2 + ... + 1/k, phi(0) = 0.
inline double harmonic(long k) noexcept {
  CompensatedSum s;
  for (long j = k; j >= 1; --j) s += 1.0 / static_cast<double>(j);
  return s.value();
}

}  // namespace wustat
