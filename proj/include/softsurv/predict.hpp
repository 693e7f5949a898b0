#pragma once

// Posterior summaries: survival curves, restricted mean survival time, LPML,
// and the RMSE used to score predicted survival against the truth.
//
// The cumulative hazard H(t) = int_0^t lambda0(s) Phi(l(s, x)) ds is computed
// with the trapezoid rule in the measure dLambda0 on a uniform grid, so a
// constant l is integrated exactly and H is nondecreasing by construction.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softsurv/augment.hpp"
#include "softsurv/data.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/hazard.hpp"
#include "softsurv/sampler.hpp"
#include "softsurv/special.hpp"

namespace softsurv {

enum class FrailtyMode { Unit, Marginal };

inline FrailtyMode parse_frailty_mode(const std::string& s) {
  if (s == "unit") return FrailtyMode::Unit;
  if (s == "marginal") return FrailtyMode::Marginal;
  throw ConfigError("unknown frailty mode '" + s + "' (expected unit or marginal)");
}

struct SurvivalCurve {
  std::vector<double> times;
  Eigen::MatrixXd per_draw;  // draws x times
  std::vector<double> mean;
  std::vector<double> lower;  // 2.5% quantile
  std::vector<double> upper;  // 97.5% quantile
};

/// Linear-interpolation (type 7) quantile of unsorted values.
inline double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// H(t) at each of `times` (ascending, >= 0) for one parameter draw.
template <class Link>
std::vector<double> integrated_hazard(const BaselineHazard& bh, const Link& link, std::span<const double> times,
                                      std::size_t grid_points = 200) {
  std::vector<double> out(times.size(), 0.0);
  if (times.empty()) return out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw std::domain_error("integrated_hazard: times must be nonnegative");
    if (i > 0 && times[i] < times[i - 1]) throw std::domain_error("integrated_hazard: times must be ascending");
  }
  const double horizon = times.back();
  if (horizon == 0.0) return out;
  const std::size_t n = std::max<std::size_t>(grid_points, 2);
  const double step = horizon / static_cast<double>(n - 1);
  std::vector<double> base(n);
  std::vector<double> prob(n);
  std::vector<double> cum(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double g = k + 1 == n ? horizon : step * static_cast<double>(k);
    base[k] = cumulative_hazard(bh, g);
    prob[k] = normal_cdf(link(g));
    if (k > 0) cum[k] = cum[k - 1] + (base[k] - base[k - 1]) * 0.5 * (prob[k] + prob[k - 1]);
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    auto k = static_cast<std::size_t>(std::floor(t / step));
    if (k >= n - 1) {
      out[i] = cum[n - 1];
      continue;
    }
    const double g = step * static_cast<double>(k);
    const double frac = (t - g) / step;
    const double p_t = prob[k] + frac * (prob[k + 1] - prob[k]);
    out[i] = cum[k] + (cumulative_hazard(bh, t) - base[k]) * 0.5 * (prob[k] + p_t);
  }
  return out;
}

inline double survival_from_hazard(double h, FrailtyMode mode, double eta) {
  if (mode == FrailtyMode::Marginal && std::isfinite(eta)) return std::exp(-eta * std::log1p(h / eta));
  return std::exp(-h);
}

/// Posterior survival curve at covariates `x`.
///
/// Unit mode uses W = 1; marginal mode integrates a new cluster's frailty
/// out, E[exp(-W H)] = (1 + H / eta)^-eta.
inline SurvivalCurve predict_survival(const PosteriorDraws& draws, std::span<const double> x,
                                      std::span<const double> times, FrailtyMode mode = FrailtyMode::Unit,
                                      std::size_t grid_points = 0) {
  if (draws.draws.empty()) throw std::invalid_argument("predict_survival: no posterior draws");
  if (x.size() != draws.covariates) throw std::invalid_argument("predict_survival: covariate length mismatch");
  if (grid_points == 0) grid_points = draws.config.quadrature_points;
  SurvivalCurve curve;
  curve.times.assign(times.begin(), times.end());
  const auto n_draws = static_cast<Eigen::Index>(draws.draws.size());
  const auto n_times = static_cast<Eigen::Index>(times.size());
  curve.per_draw.resize(n_draws, n_times);
  for (Eigen::Index d = 0; d < n_draws; ++d) {
    const Draw& draw = draws.draws[static_cast<std::size_t>(d)];
    const Forest forest = draws.forest(draw);
    SubjectLink link(forest, draws.scaler, x);
    const std::vector<double> h = integrated_hazard(draw.baseline, link, times, grid_points);
    for (Eigen::Index k = 0; k < n_times; ++k) {
      curve.per_draw(d, k) = survival_from_hazard(h[static_cast<std::size_t>(k)], mode, draw.eta);
    }
  }
  curve.mean.resize(times.size());
  curve.lower.resize(times.size());
  curve.upper.resize(times.size());
  for (Eigen::Index k = 0; k < n_times; ++k) {
    std::vector<double> col(curve.per_draw.col(k).data(), curve.per_draw.col(k).data() + n_draws);
    const auto i = static_cast<std::size_t>(k);
    curve.mean[i] = curve.per_draw.col(k).mean();
    curve.lower[i] = quantile(col, 0.025);
    curve.upper[i] = quantile(col, 0.975);
  }
  return curve;
}

namespace detail {

// Trapezoid area under (times, values) on [0, tau], with S(0) = 1 prepended
// when the grid starts after zero.
inline double area_to(std::span<const double> times, const auto& values, double tau) {
  double area = 0.0;
  double prev_t = 0.0;
  double prev_v = 1.0;
  std::size_t start = 0;
  if (!times.empty() && times[0] == 0.0) {
    prev_v = values[0];
    start = 1;
  }
  for (std::size_t k = start; k < times.size(); ++k) {
    const double t = times[k];
    const double v = values[k];
    if (t >= tau) {
      const double frac = t > prev_t ? (tau - prev_t) / (t - prev_t) : 0.0;
      const double v_tau = prev_v + frac * (v - prev_v);
      area += 0.5 * (prev_v + v_tau) * (tau - prev_t);
      return area;
    }
    area += 0.5 * (prev_v + v) * (t - prev_t);
    prev_t = t;
    prev_v = v;
  }
  return area;
}

}  // namespace detail

struct RmstSummary {
  double mean = 0.0;  // area under the posterior-mean curve
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> per_draw;
};

/// Restricted mean survival time int_0^tau S(u) du by the trapezoid rule on
/// the curve's time grid.
inline RmstSummary rmst(const SurvivalCurve& curve, double tau) {
  if (!(tau >= 0.0)) throw std::domain_error("rmst: tau must be nonnegative");
  if (curve.times.empty() || tau > curve.times.back()) throw std::domain_error("rmst: tau is beyond the curve's time grid");
  RmstSummary out;
  out.mean = detail::area_to(curve.times, curve.mean, tau);
  const auto n_draws = curve.per_draw.rows();
  out.per_draw.resize(static_cast<std::size_t>(n_draws));
  for (Eigen::Index d = 0; d < n_draws; ++d) {
    const Eigen::VectorXd row = curve.per_draw.row(d).transpose();
    out.per_draw[static_cast<std::size_t>(d)] = detail::area_to(curve.times, row, tau);
  }
  if (!out.per_draw.empty()) {
    out.lower = quantile(out.per_draw, 0.025);
    out.upper = quantile(out.per_draw, 0.975);
  }
  return out;
}

/// Likelihood of one record under one draw, conditional on its frailty.
template <class Link>
double record_likelihood(const SubjectRecord& rec, const BaselineHazard& bh, double frailty, const Link& link,
                         std::size_t grid_points) {
  switch (rec.kind()) {
    case CensorKind::Uncensored: {
      const double t = rec.left;
      const std::vector<double> h = integrated_hazard(bh, link, std::span<const double>(&t, 1), grid_points);
      return bh.hazard(t) * frailty * normal_cdf(link(t)) * std::exp(-frailty * h[0]);
    }
    case CensorKind::Right: {
      if (rec.left == 0.0) return 1.0;
      const double t = rec.left;
      const std::vector<double> h = integrated_hazard(bh, link, std::span<const double>(&t, 1), grid_points);
      return std::exp(-frailty * h[0]);
    }
    case CensorKind::Left:
    case CensorKind::Interval: {
      const double ts[2] = {rec.left, rec.right};
      const std::vector<double> h = integrated_hazard(bh, link, ts, grid_points);
      return std::exp(-frailty * h[0]) * -std::expm1(-frailty * (h[1] - h[0]));
    }
  }
  return 0.0;
}

struct LpmlResult {
  double lpml = 0.0;
  std::vector<double> log_cpo;
};

/// Log pseudo-marginal likelihood: sum_i log CPO_i with CPO_i the harmonic
/// mean over draws of each record's likelihood.
inline LpmlResult lpml(const Dataset& data, const PosteriorDraws& draws, std::size_t grid_points = 0) {
  if (draws.draws.empty()) throw std::invalid_argument("lpml: no posterior draws");
  if (grid_points == 0) grid_points = draws.config.quadrature_points;
  LpmlResult out;
  out.log_cpo.resize(data.size());
  const auto n_draws = static_cast<double>(draws.draws.size());
  std::vector<Forest> forests;
  forests.reserve(draws.draws.size());
  for (const auto& d : draws.draws) forests.push_back(draws.forest(d));
  std::vector<double> neg_log_lik(draws.draws.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    const SubjectRecord& rec = data[s];
    if (rec.x.size() != draws.covariates) throw std::invalid_argument("lpml: covariate length mismatch");
    for (std::size_t d = 0; d < draws.draws.size(); ++d) {
      const Draw& draw = draws.draws[d];
      SubjectLink link(forests[d], draws.scaler, rec.x);
      const double lik = record_likelihood(rec, draw.baseline, draws.frailty_of(draw, rec.cluster), link, grid_points);
      if (!(lik > 0.0) || !std::isfinite(lik)) {
        throw NumericalFailure("lpml: nonpositive likelihood for subject " + std::to_string(s));
      }
      neg_log_lik[d] = -std::log(lik);
    }
    const double peak = *std::max_element(neg_log_lik.begin(), neg_log_lik.end());
    double acc = 0.0;
    for (double v : neg_log_lik) acc += std::exp(v - peak);
    out.log_cpo[s] = std::log(n_draws) - (peak + std::log(acc));
    out.lpml += out.log_cpo[s];
  }
  return out;
}

/// sqrt(mean((truth - predicted)^2)) over subjects x grid points.
inline double rmse_survival(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& predicted) {
  if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
    throw std::invalid_argument("rmse_survival: shape mismatch");
  }
  if (truth.size() == 0) throw std::invalid_argument("rmse_survival: empty input");
  return std::sqrt((truth - predicted).squaredNorm() / static_cast<double>(truth.size()));
}

}  // namespace softsurv
