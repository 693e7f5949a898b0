#pragma once

// Variate generators. All of them consume an RngStream and nothing else, so
// the same stream always yields the same variates.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "softsurv/rng.hpp"

namespace softsurv {

enum class TruncationSide { Negative, Positive };

inline double sample_exponential(RngStream& rng) { return -std::log(rng.uniform()); }

/// Standard normal by the Marsaglia polar method.
inline double sample_normal(RngStream& rng) {
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

namespace detail {

// Standard normal restricted to (lower, inf).
inline double standard_normal_above(double lower, RngStream& rng) {
  if (lower <= 0.5) {
    for (;;) {
      const double z = sample_normal(rng);
      if (z > lower) return z;
    }
  }
  // Robert (1995): translated exponential proposal with optimal rate.
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double z = lower + sample_exponential(rng) / rate;
    const double d = z - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
  }
}

}  // namespace detail

/// Draw from N(mean, 1) restricted to (-inf, 0) or (0, inf).
inline double sample_truncated_normal(double mean, TruncationSide side, RngStream& rng) {
  if (side == TruncationSide::Positive) return mean + detail::standard_normal_above(-mean, rng);
  return mean - detail::standard_normal_above(mean, rng);
}

/// Gamma(shape, rate) by Marsaglia-Tsang, with the power trick for shape < 1.
inline double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw std::domain_error("sample_gamma: shape and rate must be positive and finite");
  }
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost = std::pow(rng.uniform(), 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      const double draw = boost * d * v / rate;
      return draw > 0.0 ? draw : std::numeric_limits<double>::denorm_min();
    }
  }
}

/// Poisson(mean). Multiplication method below 10, PTRS (Hormann 1993) above.
inline std::uint64_t sample_poisson(double mean, RngStream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::domain_error("sample_poisson: mean must be finite and nonnegative");
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

/// Poisson(mean) conditioned on being at least one; mean must be positive.
inline std::uint64_t sample_poisson_positive(double mean, RngStream& rng) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw std::domain_error("sample_poisson_positive: mean must be finite and positive");
  }
  if (mean > 1.0) {
    for (;;) {
      const std::uint64_t k = sample_poisson(mean, rng);
      if (k > 0) return k;
    }
  }
  // Inversion on the zero-truncated law.
  const double total = -std::expm1(-mean);
  const double target = rng.uniform() * total;
  double p = std::exp(-mean) * mean;  // P(K = 1), untruncated
  double cdf = p;
  std::uint64_t k = 1;
  while (cdf < target && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

}  // namespace softsurv
