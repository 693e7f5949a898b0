#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "softsurv/errors.hpp"

namespace softsurv {

enum class BaselineFamily { Exponential, Weibull };

inline std::string_view to_string(BaselineFamily f) {
  return f == BaselineFamily::Exponential ? "exponential" : "weibull";
}

inline BaselineFamily parse_baseline_family(std::string_view s) {
  if (s == "exponential") return BaselineFamily::Exponential;
  if (s == "weibull") return BaselineFamily::Weibull;
  throw ConfigError("unknown baseline family '" + std::string(s) + "'");
}

/// Parametric baseline hazard.
///
/// Exponential: lambda0(t) = rate, Lambda0(t) = rate * t.
/// Weibull:     lambda0(t) = rate * shape * t^(shape - 1), Lambda0(t) = rate * t^shape.
struct BaselineHazard {
  BaselineFamily family = BaselineFamily::Exponential;
  double rate = 1.0;
  double shape = 1.0;

  static BaselineHazard exponential(double rate) { return {BaselineFamily::Exponential, rate, 1.0}; }
  static BaselineHazard weibull(double shape, double rate) { return {BaselineFamily::Weibull, rate, shape}; }

  double hazard(double t) const {
    if (family == BaselineFamily::Exponential) return rate;
    return rate * shape * std::pow(t, shape - 1.0);
  }

  double log_hazard(double t) const {
    if (family == BaselineFamily::Exponential) return std::log(rate);
    return std::log(rate) + std::log(shape) + (shape - 1.0) * std::log(t);
  }
};

inline double cumulative_hazard(const BaselineHazard& bh, double t) {
  if (!(t >= 0.0)) throw std::domain_error("cumulative_hazard: time must be nonnegative");
  if (bh.family == BaselineFamily::Exponential) return bh.rate * t;
  if (t == 0.0) return 0.0;
  return bh.rate * std::pow(t, bh.shape);
}

inline double inverse_cumulative_hazard(const BaselineHazard& bh, double u) {
  if (!(u >= 0.0)) throw std::domain_error("inverse_cumulative_hazard: argument must be nonnegative");
  if (bh.family == BaselineFamily::Exponential) return u / bh.rate;
  if (u == 0.0) return 0.0;
  return std::pow(u / bh.rate, 1.0 / bh.shape);
}

}  // namespace softsurv
