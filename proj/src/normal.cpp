#include "kmt/normal.hpp"

#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace kmt {

double normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("normal_quantile: p outside [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

}  // namespace kmt
