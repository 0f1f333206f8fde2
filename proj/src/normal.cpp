#include "wustat/normal.hpp"

#include <boost/math/special_functions/erf.hpp>

#include "wustat/errors.hpp"

namespace wustat {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw RangeError("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace wustat
