#pragma once

// Simulation settings A-D and the RMSE benchmark harness.
//
//   A  independent, uncensored
//   B  clustered (W_i ~ U(0, 0.2) added to the gamma shape), uncensored
//   C  independent, interval-censored
//   D  clustered and interval-censored
//
// Survival times are Gamma(f0(x) [+ W_i], rate 6) with f0 the Friedman
// function and x uniform on [0, 1]^5.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "softsurv/data.hpp"
#include "softsurv/distributions.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/parallel.hpp"
#include "softsurv/predict.hpp"
#include "softsurv/rng.hpp"
#include "softsurv/sampler.hpp"

namespace softsurv {

inline constexpr double kSimRate = 6.0;
inline constexpr std::size_t kSimCovariates = 5;
inline constexpr std::size_t kSimGridPoints = 10;

inline double friedman(std::span<const double> x) {
  if (x.size() < kSimCovariates) throw std::invalid_argument("friedman: need five covariates");
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
         5.0 * x[4];
}

enum class Setting { A, B, C, D };

inline Setting parse_setting(const std::string& s) {
  if (s == "A" || s == "a") return Setting::A;
  if (s == "B" || s == "b") return Setting::B;
  if (s == "C" || s == "c") return Setting::C;
  if (s == "D" || s == "d") return Setting::D;
  throw ConfigError("unknown setting '" + s + "' (expected A, B, C or D)");
}

inline char to_char(Setting s) { return "ABCD"[static_cast<int>(s)]; }

inline bool is_clustered(Setting s) { return s == Setting::B || s == Setting::D; }
inline bool is_interval_censored(Setting s) { return s == Setting::C || s == Setting::D; }

/// Mean RMSE of the proposed method per setting, from the published table.
inline double reference_rmse(Setting s) {
  switch (s) {
    case Setting::A: return 0.1038;
    case Setting::B: return 0.1063;
    case Setting::C: return 0.1106;
    case Setting::D: return 0.0944;
  }
  return 0.0;
}

struct SimConfig {
  Setting setting = Setting::A;
  std::size_t subjects = 100;   // independent settings
  std::size_t clusters = 10;    // clustered settings
  std::size_t cluster_size = 10;
  std::size_t replicates = 20;
  std::size_t test_subjects = 100;
  double max_cluster_effect = 0.2;
  std::uint64_t seed = 1;

  std::size_t train_size() const { return is_clustered(setting) ? clusters * cluster_size : subjects; }

  void validate() const {
    if (train_size() == 0) throw ConfigError("training size must be positive");
    if (replicates == 0) throw ConfigError("replicates must be positive");
    if (test_subjects == 0) throw ConfigError("test size must be positive");
    if (!(max_cluster_effect >= 0.0)) throw ConfigError("cluster effect bound must be nonnegative");
  }
};

/// Interval (A, B] around T: K ~ Poisson(T) inspections before T, A is the
/// last of them (max of K uniforms on (0, T)) or 0 when K = 0, and
/// B = T + Exp(1).
inline std::pair<double, double> censor_interval(double t, RngStream& rng) {
  const std::uint64_t k = sample_poisson(t, rng);
  const double a = k > 0 ? std::pow(rng.uniform(), 1.0 / static_cast<double>(k)) * t : 0.0;
  const double b = t + sample_exponential(rng);
  return {a, b};
}

/// P(T > t) for T ~ Gamma(shape, kSimRate).
inline double gamma_survival(double shape, double t) {
  if (t <= 0.0) return 1.0;
  return boost::math::gamma_q(shape, kSimRate * t);
}

struct SimSubject {
  std::int64_t cluster = 0;
  std::vector<double> x;
  double shape = 0.0;
  double event_time = 0.0;
};

struct SimReplicate {
  Dataset train;
  std::vector<SimSubject> train_truth;
  std::vector<SimSubject> test;
  std::vector<double> grid;  // kSimGridPoints evaluation times
  Eigen::MatrixXd truth;     // test subjects x grid
};

namespace detail {

inline std::vector<SimSubject> draw_subjects(const SimConfig& cfg, std::size_t count, RngStream& rng) {
  std::vector<SimSubject> out(count);
  const bool clustered = is_clustered(cfg.setting);
  std::vector<double> effects;
  if (clustered) {
    const std::size_t n_clusters = (count + cfg.cluster_size - 1) / cfg.cluster_size;
    for (std::size_t c = 0; c < n_clusters; ++c) effects.push_back(rng.uniform(0.0, cfg.max_cluster_effect));
  }
  for (std::size_t i = 0; i < count; ++i) {
    SimSubject& s = out[i];
    s.x.resize(kSimCovariates);
    for (double& v : s.x) v = rng.uniform();
    s.shape = friedman(s.x);
    if (clustered) {
      s.cluster = static_cast<std::int64_t>(i / cfg.cluster_size);
      s.shape += effects[i / cfg.cluster_size];
    } else {
      s.cluster = static_cast<std::int64_t>(i);
    }
    s.event_time = sample_gamma(s.shape, kSimRate, rng);
  }
  return out;
}

}  // namespace detail

/// One replicate: training data, test subjects, evaluation grid and the true
/// survival matrix.
///
/// Test subjects in clustered settings come from fresh clusters of the same
/// size; their truth is conditional on their own cluster effect.
inline SimReplicate generate(const SimConfig& cfg, RngStream& rng) {
  cfg.validate();
  SimReplicate rep;
  rep.train_truth = detail::draw_subjects(cfg, cfg.train_size(), rng);
  rep.train.reserve(rep.train_truth.size());
  for (const SimSubject& s : rep.train_truth) {
    SubjectRecord r;
    r.cluster = s.cluster;
    r.x = s.x;
    if (is_interval_censored(cfg.setting)) {
      const auto [a, b] = censor_interval(s.event_time, rng);
      r.left = a;
      r.right = b;
    } else {
      r.left = s.event_time;
      r.right = s.event_time;
    }
    rep.train.push_back(std::move(r));
  }
  rep.test = detail::draw_subjects(cfg, cfg.test_subjects, rng);

  std::vector<double> times;
  times.reserve(rep.test.size());
  for (const SimSubject& s : rep.test) times.push_back(s.event_time);
  rep.grid.resize(kSimGridPoints);
  for (std::size_t g = 0; g < kSimGridPoints; ++g) {
    rep.grid[g] = quantile(times, (0.05 + 0.1 * static_cast<double>(g)));
  }
  rep.truth.resize(static_cast<Eigen::Index>(rep.test.size()), static_cast<Eigen::Index>(kSimGridPoints));
  for (std::size_t i = 0; i < rep.test.size(); ++i) {
    for (std::size_t g = 0; g < kSimGridPoints; ++g) {
      rep.truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) =
          gamma_survival(rep.test[i].shape, rep.grid[g]);
    }
  }
  return rep;
}

struct BenchConfig {
  SimConfig sim;
  FitConfig fit;
  std::size_t replicate_threads = 1;
};

struct BenchReport {
  Setting setting = Setting::A;
  std::vector<double> rmse;  // per replicate
  double mean = 0.0;
  double standard_error = 0.0;
  double reference = 0.0;
};

/// RMSE of one replicate: fit on the training data, predict the test subjects
/// with unit frailty on the evaluation grid.
inline double run_replicate(const SimConfig& sim, const FitConfig& fit_cfg, std::size_t replicate) {
  const RngStream root(sim.seed, replicate + 1);
  RngStream data_rng = root.derive(0);
  const SimReplicate rep = generate(sim, data_rng);
  FitConfig cfg = fit_cfg;
  cfg.frailty = is_clustered(sim.setting);
  const PosteriorDraws draws = fit(rep.train, cfg, root.derive(1));
  Eigen::MatrixXd predicted(rep.truth.rows(), rep.truth.cols());
  for (std::size_t i = 0; i < rep.test.size(); ++i) {
    const SurvivalCurve curve = predict_survival(draws, rep.test[i].x, rep.grid, FrailtyMode::Unit);
    for (std::size_t g = 0; g < rep.grid.size(); ++g) {
      predicted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = curve.mean[g];
    }
  }
  return rmse_survival(rep.truth, predicted);
}

inline BenchReport run_benchmark(const BenchConfig& cfg) {
  cfg.sim.validate();
  cfg.fit.validate();
  BenchReport report;
  report.setting = cfg.sim.setting;
  report.reference = reference_rmse(cfg.sim.setting);
  report.rmse.assign(cfg.sim.replicates, 0.0);
  parallel_for(cfg.sim.replicates, cfg.replicate_threads, [&](std::size_t r) {
    try {
      report.rmse[r] = run_replicate(cfg.sim, cfg.fit, r);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure("replicate " + std::to_string(r) + ": " + e.what());
    }
  });
  const auto m = static_cast<double>(report.rmse.size());
  for (double v : report.rmse) report.mean += v / m;
  if (report.rmse.size() > 1) {
    double ss = 0.0;
    for (double v : report.rmse) ss += (v - report.mean) * (v - report.mean);
    report.standard_error = std::sqrt(ss / (m - 1.0) / m);
  }
  return report;
}

}  // namespace softsurv
