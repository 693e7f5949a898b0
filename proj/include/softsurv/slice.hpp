#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "softsurv/distributions.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/rng.hpp"

namespace softsurv {

struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lower && x < upper; }
  static Interval positive() { return {0.0, std::numeric_limits<double>::infinity()}; }
};

/// One univariate slice-sampling transition (stepping out, then shrinkage).
///
/// `log_density` is only evaluated strictly inside `bounds`. Stepping out is
/// limited to `max_steps` expansions in total, split at random between the two
/// sides so the transition stays reversible.
template <class LogDensity>
double slice_sample(LogDensity&& log_density, double current, double width, Interval bounds,
                    RngStream& rng, int max_steps = 64) {
  if (!(width > 0.0)) throw std::domain_error("slice_sample: width must be positive");
  const double f0 = log_density(current);
  if (!std::isfinite(f0)) {
    throw NumericalFailure("slice_sample: log density is not finite at the current point (x = " +
                           std::to_string(current) + ")");
  }
  const double level = f0 - sample_exponential(rng);

  auto above = [&](double x) {
    if (!bounds.contains(x)) return false;
    const double f = log_density(x);
    return f > level;
  };

  double left = current - width * rng.uniform();
  double right = left + width;
  auto steps_left = static_cast<int>(std::floor(max_steps * rng.uniform()));
  int steps_right = max_steps - 1 - steps_left;
  while (steps_left > 0 && left > bounds.lower && above(left)) {
    left -= width;
    --steps_left;
  }
  while (steps_right > 0 && right < bounds.upper && above(right)) {
    right += width;
    --steps_right;
  }
  if (left < bounds.lower) left = bounds.lower;
  if (right > bounds.upper) right = bounds.upper;

  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double proposal = rng.uniform(left, right);
    if (bounds.contains(proposal)) {
      const double f = log_density(proposal);
      if (f > level) return proposal;
    }
    if (proposal > current) {
      right = proposal;
    } else {
      left = proposal;
    }
  }
  throw NumericalFailure("slice_sample: shrinkage did not terminate");
}

}  // namespace softsurv
