#pragma once

// Data augmentation for the hazard lambda0(t) W Phi(l(t, x)).
//
// An event time is the first accepted point of a Poisson process with
// intensity lambda0(t) W whose points are kept with probability Phi(l(t, x)).
// Given the event (or censoring) time Y, the rejected points on (0, Y) form a
// Poisson process with intensity lambda0(t) W (1 - Phi(l(t, x))), and each
// accepted/rejected point carries a truncated-normal probit latent.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softsurv/distributions.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/hazard.hpp"
#include "softsurv/input_scaler.hpp"
#include "softsurv/rng.hpp"
#include "softsurv/soft_tree.hpp"
#include "softsurv/special.hpp"

namespace softsurv {

/// Per-subject latent state for one sweep.
struct AugmentedSubject {
  std::optional<double> event_time;  // absent for right-censored subjects
  std::vector<double> rejected;      // G, ascending
  std::vector<double> latents;       // Z: one per rejected point, then one for the event

  std::size_t rejected_count() const { return rejected.size(); }
};

/// l(t, x) for one subject: covariates are scaled once, time per call.
class SubjectLink {
 public:
  SubjectLink(const Forest& forest, const InputScaler& scaler, std::span<const double> x)
      : forest_(&forest), scaler_(&scaler), input_(scaler.dim()) {
    scaler.scale_covariates(x, input_);
  }

  double operator()(double t) const {
    input_[0] = scaler_->scale_time(t);
    ++evaluations_;
    return evaluate(*forest_, input_);
  }

  std::span<const double> scaled_input(double t) const {
    input_[0] = scaler_->scale_time(t);
    return input_;
  }

  std::uint64_t evaluations() const { return evaluations_; }

 private:
  const Forest* forest_;
  const InputScaler* scaler_;
  mutable std::vector<double> input_;
  mutable std::uint64_t evaluations_ = 0;
};

/// Rejected points on (0, horizon): candidates from the Poisson process with
/// intensity lambda0(t) W, each kept with probability 1 - Phi(l(t)).
template <class Link>
std::vector<double> sample_rejected_points(double horizon, double frailty, const Link& link,
                                           const BaselineHazard& bh, RngStream& rng) {
  if (!(horizon > 0.0)) throw std::domain_error("sample_rejected_points: horizon must be positive");
  if (!(frailty > 0.0)) throw std::domain_error("sample_rejected_points: frailty must be positive");
  const double mass = cumulative_hazard(bh, horizon) * frailty;
  const std::uint64_t count = sample_poisson(mass, rng);
  std::vector<double> kept;
  for (std::uint64_t k = 0; k < count; ++k) {
    const double c = rng.uniform(0.0, mass);
    const double t = inverse_cumulative_hazard(bh, c / frailty);
    if (!(t > 0.0 && t < horizon)) continue;  // measure-zero rounding at the ends
    if (rng.uniform() <= 1.0 - normal_cdf(link(t))) kept.push_back(t);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

/// Probit latents: negative-truncated at each rejected point, then one
/// positive-truncated latent at the event time when there is one.
template <class Link>
std::vector<double> sample_probit_latents(const AugmentedSubject& aug, const Link& link, RngStream& rng) {
  std::vector<double> z;
  z.reserve(aug.rejected.size() + 1);
  for (double g : aug.rejected) z.push_back(sample_truncated_normal(link(g), TruncationSide::Negative, rng));
  if (aug.event_time) z.push_back(sample_truncated_normal(link(*aug.event_time), TruncationSide::Positive, rng));
  return z;
}

/// First accepted point of the thinned process on (left, right], conditional
/// on at least one acceptance.
template <class Link>
double impute_interval_time(double left, double right, double frailty, const Link& link, const BaselineHazard& bh,
                            RngStream& rng, std::uint64_t max_attempts = 1'000'000) {
  if (!(right > left) || !std::isfinite(right) || !(left >= 0.0)) {
    throw std::domain_error("impute_interval_time: need 0 <= left < right < inf");
  }
  const double lo = cumulative_hazard(bh, left) * frailty;
  const double hi = cumulative_hazard(bh, right) * frailty;
  if (!(hi > lo)) {
    throw NumericalFailure("impute_interval_time: interval carries no baseline mass");
  }
  for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t count = sample_poisson_positive(hi - lo, rng);
    double first = std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 0; k < count; ++k) {
      const double c = rng.uniform(lo, hi);
      const double t = std::clamp(inverse_cumulative_hazard(bh, c / frailty), left, right);
      if (rng.uniform() <= normal_cdf(link(t)) && t < first) first = t;
    }
    if (std::isfinite(first)) {
      // Rounding can land exactly on the open end.
      return first > left ? first : std::nextafter(left, right);
    }
  }
  throw NumericalFailure("impute_interval_time: no accepted point after " + std::to_string(max_attempts) +
                         " attempts on (" + std::to_string(left) + ", " + std::to_string(right) + "]");
}

/// Draw an event time from hazard lambda0(t) W Phi(l(t)) by running the
/// thinned process from time zero.
template <class Link>
double simulate_event_time(double frailty, const Link& link, const BaselineHazard& bh, RngStream& rng,
                           std::uint64_t max_points = 10'000'000) {
  double c = 0.0;
  for (std::uint64_t k = 0; k < max_points; ++k) {
    c += sample_exponential(rng) / frailty;
    const double t = inverse_cumulative_hazard(bh, c);
    if (rng.uniform() <= normal_cdf(link(t))) return t;
  }
  throw NumericalFailure("simulate_event_time: no accepted point");
}

}  // namespace softsurv
