#pragma once

// Statistical helpers shared by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace testing_support {

/// Asymptotic Kolmogorov survival function P(K > x).
inline double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS p-value of `xs` against a continuous CDF.
inline double ks_pvalue(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Variance of the mean of an autocorrelated series by batch means.
inline double batch_mean_variance(const std::vector<double>& v, std::size_t batches = 50) {
  const std::size_t size = v.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) s += v[i];
    means[b] = s / static_cast<double>(size);
  }
  return variance(means) / static_cast<double>(batches);
}

/// Geweke z-score: independent draws `forward` against a chain `chain`.
inline double geweke_z(const std::vector<double>& forward, const std::vector<double>& chain) {
  const double v = variance(forward) / static_cast<double>(forward.size()) + batch_mean_variance(chain);
  return (mean(forward) - mean(chain)) / std::sqrt(v);
}

/// Total-variation distance between a sample histogram and bin probabilities
/// on equal-width bins over [lo, hi).
inline double histogram_tv(const std::vector<double>& xs, const std::vector<double>& bin_prob, double lo,
                           double hi) {
  const std::size_t bins = bin_prob.size();
  std::vector<double> counts(bins, 0.0);
  double outside = 0.0;
  for (double x : xs) {
    const double u = (x - lo) / (hi - lo) * static_cast<double>(bins);
    if (u < 0.0 || u >= static_cast<double>(bins)) {
      outside += 1.0;
      continue;
    }
    counts[static_cast<std::size_t>(u)] += 1.0;
  }
  const auto n = static_cast<double>(xs.size());
  double tv = outside / n;
  double covered = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    tv += std::abs(counts[b] / n - bin_prob[b]);
    covered += bin_prob[b];
  }
  tv += std::max(0.0, 1.0 - covered);
  return 0.5 * tv;
}

/// Bin probabilities of an unnormalized log-density by midpoint quadrature
/// with `sub` points per bin.
inline std::vector<double> grid_bins(const std::function<double(double)>& log_density, double lo, double hi,
                                     std::size_t bins, std::size_t sub = 200) {
  const double width = (hi - lo) / static_cast<double>(bins * sub);
  std::vector<double> logs(bins * sub);
  for (std::size_t k = 0; k < logs.size(); ++k) logs[k] = log_density(lo + (static_cast<double>(k) + 0.5) * width);
  const double peak = *std::max_element(logs.begin(), logs.end());
  std::vector<double> out(bins, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const double v = std::exp(logs[k] - peak);
    out[k / sub] += v;
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

/// Composite Simpson integral of f on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t panels = 2000) {
  if (panels % 2 == 1) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double s = f(a) + f(b);
  for (std::size_t k = 1; k < panels; ++k) s += f(a + h * static_cast<double>(k)) * (k % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace testing_support
