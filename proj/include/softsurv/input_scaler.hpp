#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace softsurv {

/// Maps (t, x) onto the unit cube the trees split on.
///
/// Coordinate 0 is time, divided by `time_scale`; coordinates 1..p are the
/// covariates, min-max scaled (binary columns pass through). Every output is
/// clamped to [0, 1].
struct InputScaler {
  struct Column {
    double min = 0.0;
    double max = 1.0;
    bool binary = false;
  };

  double time_scale = 1.0;
  std::vector<Column> columns;

  std::size_t num_covariates() const { return columns.size(); }
  std::size_t dim() const { return columns.size() + 1; }

  double scale_time(double t) const { return std::clamp(t / time_scale, 0.0, 1.0); }

  double scale_covariate(std::size_t j, double v) const {
    const Column& c = columns[j];
    if (c.binary) return std::clamp(v, 0.0, 1.0);
    const double range = c.max - c.min;
    if (!(range > 0.0)) return 0.5;
    return std::clamp((v - c.min) / range, 0.0, 1.0);
  }

  void scale_covariates(std::span<const double> x, std::span<double> out) const {
    for (std::size_t j = 0; j < columns.size(); ++j) out[j + 1] = scale_covariate(j, x[j]);
  }

  void scale(double t, std::span<const double> x, std::span<double> out) const {
    out[0] = scale_time(t);
    scale_covariates(x, out);
  }

  std::vector<double> scale(double t, std::span<const double> x) const {
    std::vector<double> out(dim());
    scale(t, x, out);
    return out;
  }

  /// Fit covariate ranges from rows of raw covariates; time scale is
  /// 1.5 times the largest finite interval endpoint.
  static InputScaler fit(const std::vector<std::vector<double>>& covariates, double max_finite_time) {
    if (!(max_finite_time > 0.0)) throw std::invalid_argument("InputScaler: need a positive time endpoint");
    InputScaler s;
    s.time_scale = 1.5 * max_finite_time;
    const std::size_t p = covariates.empty() ? 0 : covariates.front().size();
    s.columns.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      Column& c = s.columns[j];
      c.min = std::numeric_limits<double>::infinity();
      c.max = -std::numeric_limits<double>::infinity();
      bool binary = true;
      for (const auto& row : covariates) {
        c.min = std::min(c.min, row[j]);
        c.max = std::max(c.max, row[j]);
        if (row[j] != 0.0 && row[j] != 1.0) binary = false;
      }
      c.binary = binary;
    }
    return s;
  }
};

}  // namespace softsurv
