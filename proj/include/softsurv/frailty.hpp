#pragma once

// Conditional updates for the frailties, the frailty shape eta, and the
// baseline-hazard parameters, all on the augmented (event + rejected point)
// likelihood
//
//   prod lambda0(s) W_i   over events and rejected points s
//   x exp(-W_i Lambda0(Y_ij)),
//
// with Y_ij the event time or the right-censoring time.

#include <cmath>
#include <span>
#include <vector>

#include "softsurv/distributions.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/hazard.hpp"
#include "softsurv/rng.hpp"
#include "softsurv/slice.hpp"
#include "softsurv/special.hpp"

namespace softsurv {

/// Gamma(shape, rate) hyperparameters.
struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const { return shape / rate; }
  void validate(const char* what) const {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
      throw ConfigError(std::string(what) + ": Gamma prior needs positive finite shape and rate");
    }
  }
};

struct FrailtyState {
  double eta = 400.0;
  std::vector<double> frailty;  // one per cluster
};

/// Per-cluster sufficient statistics for the frailty update.
struct ClusterTotals {
  double events = 0.0;          // observed or imputed event times
  double rejected = 0.0;        // sum of rejected-point counts
  double cumulative_hazard = 0.0;  // sum_j Lambda0(Y_ij)
};

/// Gamma(eta + d_i + sum_j m_ij, eta + sum_j Lambda0(Y_ij)).
inline GammaPrior frailty_conditional(double eta, const ClusterTotals& totals) {
  return {eta + totals.events + totals.rejected, eta + totals.cumulative_hazard};
}

inline std::vector<double> update_frailties(std::span<const ClusterTotals> clusters, double eta, RngStream& rng) {
  std::vector<double> out(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const GammaPrior post = frailty_conditional(eta, clusters[i]);
    out[i] = sample_gamma(post.shape, post.rate, rng);
  }
  return out;
}

/// log p(eta) + sum_i log Gamma(W_i; eta, eta), up to a constant.
inline double eta_log_posterior(double eta, std::span<const double> frailty, const GammaPrior& prior) {
  if (!(eta > 0.0)) return -std::numeric_limits<double>::infinity();
  double out = (prior.shape - 1.0) * std::log(eta) - prior.rate * eta;
  if (frailty.empty()) return out;
  double sum_log = 0.0;
  double sum = 0.0;
  for (double w : frailty) {
    sum_log += std::log(w);
    sum += w;
  }
  const auto n = static_cast<double>(frailty.size());
  out += n * (eta * std::log(eta) - std::lgamma(eta)) + (eta - 1.0) * sum_log - eta * sum;
  return out;
}

/// One slice-sampling transition for eta, run on log(eta).
inline double update_eta(double eta, std::span<const double> frailty, const GammaPrior& prior, RngStream& rng) {
  prior.validate("eta");
  auto target = [&](double log_eta) {
    const double e = std::exp(log_eta);
    return eta_log_posterior(e, frailty, prior) + log_eta;
  };
  return std::exp(slice_sample(target, std::log(eta), 1.0, Interval{}, rng));
}

/// Augmented-likelihood statistics for the baseline parameters.
struct BaselineSuffStats {
  double points = 0.0;           // events + rejected points
  double sum_log_time = 0.0;     // sum of log times over those points
  std::vector<double> exposure_weight;  // W_i per subject
  std::vector<double> exposure_time;    // Y_ij per subject

  void add_points(std::span<const double> times) {
    for (double t : times) {
      points += 1.0;
      sum_log_time += std::log(t);
    }
  }
  void add_point(double t) {
    points += 1.0;
    sum_log_time += std::log(t);
  }
  void add_exposure(double weight, double time) {
    exposure_weight.push_back(weight);
    exposure_time.push_back(time);
  }
  double weighted_exposure() const {
    double s = 0.0;
    for (std::size_t k = 0; k < exposure_time.size(); ++k) s += exposure_weight[k] * exposure_time[k];
    return s;
  }
  double weighted_power_exposure(double shape) const {
    double s = 0.0;
    for (std::size_t k = 0; k < exposure_time.size(); ++k) {
      if (exposure_time[k] > 0.0) s += exposure_weight[k] * std::pow(exposure_time[k], shape);
    }
    return s;
  }
};

struct BaselinePrior {
  GammaPrior rate{1.0, 1.0};
  GammaPrior weibull_shape{2.0, 2.0};
};

/// Conjugate Gamma conditional of the exponential rate.
inline GammaPrior exponential_rate_conditional(const BaselineSuffStats& s, const GammaPrior& prior) {
  return {prior.shape + s.points, prior.rate + s.weighted_exposure()};
}

/// Exponential: exact conjugate draw. Weibull: slice sampling on log(shape),
/// then the conjugate rate draw given the shape.
inline BaselineHazard update_baseline(const BaselineHazard& current, const BaselineSuffStats& s,
                                      const BaselinePrior& prior, RngStream& rng) {
  if (current.family == BaselineFamily::Exponential) {
    const GammaPrior post = exponential_rate_conditional(s, prior.rate);
    return BaselineHazard::exponential(sample_gamma(post.shape, post.rate, rng));
  }
  BaselineHazard next = current;
  auto shape_target = [&](double log_shape) {
    const double k = std::exp(log_shape);
    return s.points * log_shape + (k - 1.0) * s.sum_log_time - next.rate * s.weighted_power_exposure(k) +
           (prior.weibull_shape.shape - 1.0) * log_shape - prior.weibull_shape.rate * k + log_shape;
  };
  next.shape = std::exp(slice_sample(shape_target, std::log(next.shape), 0.5, Interval{}, rng));
  const double exposure = s.weighted_power_exposure(next.shape);
  next.rate = sample_gamma(prior.rate.shape + s.points, prior.rate.rate + exposure, rng);
  return next;
}

}  // namespace softsurv
