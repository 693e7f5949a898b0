#pragma once

#include <cmath>
#include <numbers>

namespace softsurv {

/// Standard normal distribution function.
///
/// Evaluated through the complementary error function, which keeps full
/// relative accuracy in the lower tail; absolute error is below 1e-15.
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

inline double normal_log_density(double x, double mean = 0.0, double sd = 1.0) {
  const double r = (x - mean) / sd;
  return -0.5 * r * r - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Log density of Gamma(shape, rate) at x > 0.
inline double gamma_log_density(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Logistic gate used by soft tree branches.
inline double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace softsurv
